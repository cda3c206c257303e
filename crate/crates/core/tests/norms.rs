use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use sparsehw::norms::{
    centering_coefficient_matrix, diag_scale, ipw_coefficient_matrix, pi_frobenius,
};
use sparsehw::{CoefficientMatrix, MaskMoments};

fn dense(n: usize, entries: &[f64]) -> CoefficientMatrix {
    CoefficientMatrix::dense(n, entries.to_vec()).unwrap()
}

fn spectral_norm(a: &CoefficientMatrix) -> f64 {
    let n = a.n();
    let m = DMatrix::from_fn(n, n, |i, j| a.get(i, j));
    let gram = m.transpose() * &m;
    let eig = SymmetricEigen::new(gram);
    eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(*v)).max(0.0).sqrt()
}

fn matrix_strategy(max_n: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1..=max_n).prop_flat_map(|n| (Just(n), prop::collection::vec(-3.0..3.0_f64, n * n)))
}

fn probabilities(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05..=1.0_f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unit_probabilities_reduce_to_frobenius((n, e) in matrix_strategy(12)) {
        let a = dense(n, &e);
        let pi = pi_frobenius(&a, &MaskMoments::complete(n)).unwrap();
        prop_assert!((pi - a.frobenius()).abs() <= 1e-12 * a.frobenius().max(1.0));
    }

    #[test]
    fn pi_frobenius_never_exceeds_frobenius(
        (n, e, p1, p2) in matrix_strategy(10)
            .prop_flat_map(|(n, e)| (Just(n), Just(e), probabilities(n), probabilities(n)))
    ) {
        let a = dense(n, &e);
        let p12: Vec<f64> = p1.iter().zip(&p2).map(|(x, y)| x * y).collect();
        let m = MaskMoments::new(p1.clone(), p2.clone(), p12).unwrap();
        let v = pi_frobenius(&a, &m).unwrap();
        prop_assert!(v <= a.frobenius() + 1e-12);

        // Raising every probability can only raise the norm.
        let up1: Vec<f64> = p1.iter().map(|x| (x * 1.5).min(1.0)).collect();
        let up2: Vec<f64> = p2.iter().map(|x| (x * 1.5).min(1.0)).collect();
        let up12: Vec<f64> = up1.iter().zip(&up2).map(|(x, y)| x * y).collect();
        let higher = pi_frobenius(&a, &MaskMoments::new(up1, up2, up12).unwrap()).unwrap();
        prop_assert!(v <= higher + 1e-12);
    }

    #[test]
    fn pi_frobenius_matches_naive_sum(
        (n, e, p1, p2) in matrix_strategy(10)
            .prop_flat_map(|(n, e)| (Just(n), Just(e), probabilities(n), probabilities(n)))
    ) {
        let a = dense(n, &e);
        let p12: Vec<f64> = p1.iter().zip(&p2).map(|(x, y)| x.min(*y)).collect();
        let m = MaskMoments::new(p1.clone(), p2.clone(), p12.clone()).unwrap();
        let mut naive = 0.0;
        for i in 0..n {
            for j in 0..n {
                let w = if i == j { p12[i] } else { p1[i] * p2[j] };
                naive += w * a.get(i, j).powi(2);
            }
        }
        let v = pi_frobenius(&a, &m).unwrap();
        prop_assert!((v * v - naive).abs() <= 1e-12 * naive.max(1.0));
    }

    #[test]
    fn diag_scale_matches_loop(
        (n, e, l, r) in matrix_strategy(10).prop_flat_map(|(n, e)| (
            Just(n),
            Just(e),
            prop::collection::vec(-2.0..2.0_f64, n),
            prop::collection::vec(-2.0..2.0_f64, n),
        ))
    ) {
        let a = dense(n, &e);
        let s = diag_scale(&a, &l, &r).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(s.get(i, j), l[i] * e[i * n + j] * r[j]);
            }
        }
    }

    #[test]
    fn operator_norm_matches_eigendecomposition((n, e) in matrix_strategy(50)) {
        let a = dense(n, &e);
        let ours = a.operator_norm().unwrap();
        let reference = spectral_norm(&a);
        prop_assert!((ours - reference).abs() <= 1e-8 * reference.max(1.0),
            "ours {ours} reference {reference}");
    }

    #[test]
    fn operator_norm_within_frobenius((n, e) in matrix_strategy(20)) {
        let a = dense(n, &e);
        let op = a.operator_norm().unwrap();
        prop_assert!(op <= a.frobenius() + 1e-9);
        prop_assert!(a.frobenius() <= (n as f64).sqrt() * op + 1e-9);
    }

    #[test]
    fn equicorrelated_agrees_with_dense(n in 2usize..40, diag in -2.0..2.0_f64, off in -2.0..2.0_f64) {
        let eq = CoefficientMatrix::equicorrelated(n, diag, off).unwrap();
        let d = dense(n, &eq.to_dense_entries());
        prop_assert!((eq.frobenius() - d.frobenius()).abs() <= 1e-10 * d.frobenius().max(1.0));
        let op_eq = eq.operator_norm().unwrap();
        let op_d = spectral_norm(&d);
        prop_assert!((op_eq - op_d).abs() <= 1e-8 * op_d.max(1.0));
        let pi = vec![0.6; n];
        let m = MaskMoments::shared(pi).unwrap();
        let a = pi_frobenius(&eq, &m).unwrap();
        let b = pi_frobenius(&d, &m).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * b.max(1.0));
    }
}

#[test]
fn centering_matrix_identities() {
    for n in [2usize, 3, 5, 10, 100] {
        let nf = n as f64;
        let a = centering_coefficient_matrix(n).unwrap();
        // Eigenvalues: 0 on the ones vector, 1/(n−1) on its complement.
        assert!((a.operator_norm().unwrap() - 1.0 / (nf - 1.0)).abs() < 1e-12);
        assert!((a.frobenius().powi(2) - 1.0 / (nf - 1.0)).abs() < 1e-12);
        let ones = vec![1.0; n];
        assert!(a.mul_vec(&ones).unwrap().iter().all(|v| v.abs() < 1e-12));
    }
    let a = centering_coefficient_matrix(5).unwrap();
    assert!((a.operator_norm().unwrap() - 0.25).abs() < 1e-12);
    assert!((a.frobenius() - 0.5).abs() < 1e-12);
}

#[test]
fn centering_form_is_sample_covariance() {
    let x = [1.0, -0.5, 2.0, 0.3, 1.1, -2.0];
    let y = [0.2, 0.4, -1.0, 2.5, 0.0, 1.0];
    let n = x.len();
    let a = centering_coefficient_matrix(n).unwrap();
    let form: f64 = x.iter().zip(a.mul_vec(&y).unwrap()).map(|(u, v)| u * v).sum();
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let s = x.iter().zip(&y).map(|(u, v)| (u - mx) * (v - my)).sum::<f64>() / (n as f64 - 1.0);
    assert!((form - s).abs() < 1e-12);
}

#[test]
fn ipw_matrix_reduces_to_centering_at_full_observation() {
    let n = 7;
    let a = ipw_coefficient_matrix(n, 1.0, 1.0, 1.0).unwrap();
    let c = centering_coefficient_matrix(n).unwrap();
    for i in 0..n {
        for j in 0..n {
            assert!((a.get(i, j) - c.get(i, j)).abs() < 1e-15);
        }
    }
}
