use liouvlab::numerics::{eig_general, expm, kron, trace_distance, ComplexMatrix};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn matrix_strategy(n: usize, scale: f64) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-scale..scale, -scale..scale), n * n)
        .prop_map(move |v| ComplexMatrix::new(n, n, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
}

/// Random density matrix ρ = B B† / Tr(B B†).
fn density_strategy(d: usize) -> impl Strategy<Value = ComplexMatrix> {
    matrix_strategy(d, 1.0).prop_map(|b| {
        let p = &b * &b.adjoint();
        let tr = p.trace().re;
        p.scale_real(1.0 / tr)
    })
}

/// Brute-force Kronecker product by explicit index arithmetic.
fn kron_oracle(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

fn reconstruction_error(a: &ComplexMatrix) -> f64 {
    let e = eig_general(a).unwrap();
    let n = a.rows();
    let av = a * &e.right_eigenvectors;
    let vl = ComplexMatrix::from_fn(n, n, |i, j| e.right_eigenvectors[(i, j)] * e.eigenvalues[j]);
    (&av - &vl).frobenius_norm() / a.frobenius_norm()
}

#[test]
fn companion_matrix_roots() {
    // Expand Π (λ - r) for r = 1..4 into monic coefficients.
    let roots = [1.0, 2.0, 3.0, 4.0];
    let mut coeffs = vec![1.0];
    for r in roots {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, a) in coeffs.iter().enumerate() {
            next[k] += a;
            next[k + 1] -= r * a;
        }
        coeffs = next;
    }
    // Companion: first row -a_1..-a_n, ones on the subdiagonal.
    let n = roots.len();
    let comp = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == 0 {
            c(-coeffs[j + 1], 0.0)
        } else if i == j + 1 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let e = eig_general(&comp).unwrap();
    for (got, want) in e.eigenvalues.iter().zip(roots) {
        assert!((got - c(want, 0.0)).norm() < 1e-10, "{got} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_matches_index_formula(a in matrix_strategy(2, 1.0), b in matrix_strategy(2, 1.0)) {
        prop_assert_eq!(kron(&a, &b), kron_oracle(&a, &b));
    }

    #[test]
    fn kron_is_associative_and_bilinear(
        a in matrix_strategy(2, 1.0),
        b in matrix_strategy(2, 1.0),
        b2 in matrix_strategy(2, 1.0),
        m in matrix_strategy(3, 1.0),
        s in -2.0f64..2.0,
    ) {
        let lhs = kron(&kron(&a, &b), &m);
        let rhs = kron(&a, &kron(&b, &m));
        prop_assert!((&lhs - &rhs).frobenius_norm() <= 1e-14 * lhs.frobenius_norm().max(1.0));

        let sum = kron(&a, &(&b + &b2.scale_real(s)));
        let split = &kron(&a, &b) + &kron(&a, &b2).scale_real(s);
        prop_assert!((&sum - &split).frobenius_norm() <= 1e-14 * sum.frobenius_norm().max(1.0));
    }

    #[test]
    fn eig_reconstructs_4x4(a in matrix_strategy(4, 3.0)) {
        prop_assert!(reconstruction_error(&a) <= 1e-9);
    }

    #[test]
    fn eig_reconstructs_9x9(a in matrix_strategy(9, 3.0)) {
        prop_assert!(reconstruction_error(&a) <= 1e-9);
    }

    #[test]
    fn eigenvalues_are_canonically_ordered(a in matrix_strategy(5, 2.0)) {
        let e = eig_general(&a).unwrap();
        for w in e.eigenvalues.windows(2) {
            prop_assert!(w[0].re <= w[1].re + 1e-8);
        }
    }

    #[test]
    fn expm_inverse_identity(a in matrix_strategy(4, 2.5)) {
        // Entries bounded by 2.5·√2 keep |A|_F ≤ 10 up to draw.
        prop_assume!(a.frobenius_norm() <= 10.0);
        let p = &expm(&a).unwrap() * &expm(&a.scale_real(-1.0)).unwrap();
        prop_assert!((&p - &ComplexMatrix::identity(4)).frobenius_norm() <= 1e-8);
    }

    #[test]
    fn trace_distance_is_a_metric(
        a in density_strategy(3),
        b in density_strategy(3),
        m in density_strategy(3),
    ) {
        let ab = trace_distance(&a, &b).unwrap();
        let ba = trace_distance(&b, &a).unwrap();
        let am = trace_distance(&a, &m).unwrap();
        let mb = trace_distance(&m, &b).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-14);
        prop_assert!(ab <= am + mb + 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
    }
}

#[test]
fn expm_accuracy_against_diagonalizable_closed_form() {
    // A = S D S^{-1} with known S, D: expm(A) = S e^D S^{-1}.
    let s = ComplexMatrix::from_rows(&[[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(1.0, 1.0)]]).unwrap();
    let s_inv = ComplexMatrix::from_rows(&[[c(1.0, 0.0), c(-0.5, 0.5)], [c(0.0, 0.0), c(0.5, -0.5)]]).unwrap();
    let d = [c(-20.0, 5.0), c(3.0, -30.0)];
    let a = &(&s * &ComplexMatrix::diagonal(&d)) * &s_inv;
    let expected = &(&s * &ComplexMatrix::diagonal(&[d[0].exp(), d[1].exp()])) * &s_inv;
    let got = expm(&a).unwrap();
    assert!((&got - &expected).frobenius_norm() <= 1e-10 * expected.frobenius_norm());
}
