use proptest::prelude::*;

use tracelab::eigen::{self, Matrix};

fn symmetric(n: usize, entries: &[f64]) -> Matrix {
    let mut a = Matrix::zeros(n);
    let mut it = entries.iter().cycle();
    for i in 0..n {
        for j in 0..=i {
            let x = *it.next().unwrap();
            a[(i, j)] = x;
            a[(j, i)] = x;
        }
    }
    a
}

fn matrix_strategy(max: usize) -> impl Strategy<Value = Matrix> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec(-10.0f64..10.0, n * (n + 1) / 2).prop_map(move |v| symmetric(n, &v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ql_agrees_with_jacobi(a in matrix_strategy(24)) {
        let ql = eigen::symmetric_eigenvalues(&a).unwrap();
        let jac = eigen::jacobi_eigenvalues(&a).unwrap();
        let scale = a.frobenius().max(1e-300);
        for (x, y) in ql.iter().zip(&jac) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn trace_is_preserved(a in matrix_strategy(32)) {
        let v = eigen::symmetric_eigenvalues(&a).unwrap();
        let s: f64 = v.iter().sum();
        prop_assert!((s - a.trace()).abs() <= 1e-12 * a.frobenius().max(1.0));
    }

    #[test]
    fn weyl_perturbation_bound(a in matrix_strategy(20), seed in prop::collection::vec(-1e-3f64..1e-3, 210)) {
        let n = a.size();
        let e = symmetric(n, &seed);
        let b = Matrix::from_fn(n, |i, j| a[(i, j)] + e[(i, j)]);
        let va = eigen::symmetric_eigenvalues(&a).unwrap();
        let vb = eigen::symmetric_eigenvalues(&b).unwrap();
        // ‖E‖₂ ≤ ‖E‖_F
        let bound = e.frobenius() + 1e-12 * a.frobenius().max(1.0);
        for (x, y) in va.iter().zip(&vb) {
            prop_assert!((x - y).abs() <= bound);
        }
    }

    #[test]
    fn eigenvectors_reconstruct(a in matrix_strategy(16)) {
        let ed = eigen::symmetric_eigen(&a).unwrap();
        let n = a.size();
        let scale = a.frobenius().max(1.0);
        for c in 0..n {
            for r in 0..n {
                let av: f64 = (0..n).map(|k| a[(r, k)] * ed.vectors[(k, c)]).sum();
                prop_assert!((av - ed.values[c] * ed.vectors[(r, c)]).abs() <= 1e-11 * scale);
            }
        }
    }
}
