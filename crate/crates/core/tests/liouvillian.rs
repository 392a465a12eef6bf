use liouvlab::liouvillian::*;
use liouvlab::model::{Dimension, DriveParams, QuantumSystem, Rates};
use liouvlab::numerics::{hermitian_eigenvalues, principal_angle, ComplexMatrix};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Qubit Liouvillian written out entry by entry.
fn qubit_reference(j: f64, delta: f64, ge: f64, gp: f64) -> ComplexMatrix {
    let i = c(0.0, 1.0);
    let z = c(0.0, 0.0);
    let r = |x: f64| c(x, 0.0);
    ComplexMatrix::from_rows(&[
        [z, i * j, -i * j, r(ge)],
        [i * j, -i * delta - r(ge / 2.0 + gp), z, -i * j],
        [-i * j, z, i * delta - r(ge / 2.0 + gp), i * j],
        [z, -i * j, i * j, r(-ge)],
    ])
    .unwrap()
}

/// Resonant qutrit Liouvillian without dephasing or f-decay, entry by entry.
fn qutrit_reference(j: f64, ge: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(9, 9);
    let ij = c(0.0, j);
    let h = c(-ge / 2.0, 0.0);
    let entries = [
        (0, 1, ij),
        (0, 3, -ij),
        (0, 4, c(ge, 0.0)),
        (1, 0, ij),
        (1, 1, h),
        (1, 4, -ij),
        (2, 5, -ij),
        (3, 0, -ij),
        (3, 3, h),
        (3, 4, ij),
        (4, 1, -ij),
        (4, 3, ij),
        (4, 4, c(-ge, 0.0)),
        (5, 2, -ij),
        (5, 5, h),
        (6, 7, ij),
        (7, 6, ij),
        (7, 7, h),
    ];
    for (r, col, v) in entries {
        m[(r, col)] = v;
    }
    m
}

fn qubit(j: f64, delta: f64, ge: f64, gp: f64) -> Superoperator {
    build_superoperator(&QuantumSystem::qubit(j, delta, ge, gp).unwrap())
}

fn qutrit(j: f64, ge: f64) -> Superoperator {
    let sys = QuantumSystem::new(
        Dimension::Qutrit,
        DriveParams::new(j, 0.0).unwrap(),
        Rates::qutrit(ge, 0.0, 0.0, 0.0).unwrap(),
    )
    .unwrap();
    build_superoperator(&sys)
}

/// Roots of `x² − tr·x + det`.
fn quadratic_roots(tr: f64, det: f64) -> [Complex64; 2] {
    let disc = c(tr * tr - 4.0 * det, 0.0).sqrt();
    [(c(tr, 0.0) - disc) / 2.0, (c(tr, 0.0) + disc) / 2.0]
}

fn assert_same_multiset(got: &[Complex64], want: &[Complex64], tol: f64) {
    assert_eq!(got.len(), want.len());
    let mut used = vec![false; want.len()];
    for g in got {
        let k = (0..want.len())
            .filter(|&k| !used[k])
            .min_by(|&a, &b| (g - want[a]).norm().total_cmp(&(g - want[b]).norm()))
            .unwrap();
        assert!((g - want[k]).norm() <= tol, "{g} vs {:?}", want);
        used[k] = true;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn qubit_superoperator_matches_reference(
        j in 0.0f64..20.0, delta in -40.0f64..40.0, ge in 0.0f64..10.0, gp in 0.0f64..5.0,
    ) {
        let got = qubit(j, delta, ge, gp).matrix;
        let want = qubit_reference(j, delta, ge, gp);
        prop_assert!((&got - &want).max_abs() <= 1e-14);
    }

    #[test]
    fn qutrit_superoperator_matches_reference(j in 0.0f64..20.0, ge in 0.0f64..10.0) {
        let got = qutrit(j, ge).matrix;
        prop_assert!((&got - &qutrit_reference(j, ge)).max_abs() <= 1e-14);
    }

    #[test]
    fn spectrum_is_dissipative_with_a_steady_state(
        j in 0.0f64..5.0, delta in -5.0f64..5.0, ge in 0.5f64..6.0, gp in 0.0f64..2.0,
    ) {
        let s = spectrum(&qubit(j, delta, ge, gp)).unwrap();
        prop_assert!(s.eigenvalues.iter().any(|z| z.norm() <= 1e-9));
        prop_assert!(s.eigenvalues.iter().all(|z| z.re <= 1e-9));
    }

    #[test]
    fn steady_state_is_null_and_positive(
        j in 0.0f64..5.0, delta in -5.0f64..5.0, ge in 0.5f64..6.0, gp in 0.0f64..2.0,
    ) {
        let sop = qubit(j, delta, ge, gp);
        let rho = steady_state(&sop).unwrap();
        prop_assert!(sop.matrix.matvec(&rho.vectorize()).iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-9);
        prop_assert!(hermitian_eigenvalues(&rho).unwrap().iter().all(|&e| e >= -1e-8));
        prop_assert!((rho.trace() - c(1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn spectrum_matches_closed_form_on_resonance(j in 0.0f64..2.0, ge in 0.5f64..6.0) {
        let s = spectrum(&qubit(j, 0.0, ge, 0.0)).unwrap();
        let pairs = analytic_qubit_eigensystem(
            &DriveParams::new(j, 0.0).unwrap(),
            &Rates::new(ge, 0.0).unwrap(),
        ).unwrap();
        let want: Vec<Complex64> = pairs.iter().map(|p| p.eigenvalue).collect();
        assert_same_multiset(&s.eigenvalues, &want, 1e-9);
        // Eigenmatrices agree in direction wherever the spectrum is simple.
        prop_assume!(s.min_eigenvalue_gap > 1e-3);
        for p in &pairs {
            let k = (0..4).min_by(|&a, &b| {
                (s.eigenvalues[a] - p.eigenvalue).norm().total_cmp(&(s.eigenvalues[b] - p.eigenvalue).norm())
            }).unwrap();
            let v: Vec<Complex64> = (0..4).map(|r| s.eigenvectors[(r, k)]).collect();
            prop_assert!(principal_angle(&v, &p.eigenmatrix.vectorize()) <= 1e-6);
        }
    }
}

#[test]
fn zero_parameters_give_zero_matrix() {
    assert_eq!(qubit(0.0, 0.0, 0.0, 0.0).matrix, ComplexMatrix::zeros(4, 4));
}

#[test]
fn resonant_spectrum_below_ep() {
    let s = spectrum(&qubit(0.3, 0.0, 4.0, 0.0)).unwrap();
    // y–z block: trace −3γe/2, determinant γe²/2 + 4J².
    let [a, b] = quadratic_roots(-6.0, 8.0 + 4.0 * 0.09);
    assert_same_multiset(&s.eigenvalues, &[c(0.0, 0.0), c(-2.0, 0.0), a, b], 1e-12);
    assert_same_multiset(&[a, b], &[c(-3.8, 0.0), c(-2.2, 0.0)], 1e-12);
    assert_eq!(s.ep_order, 0);
}

#[test]
fn resonant_spectrum_at_ep() {
    let (ge, gp) = (4.4, 0.1);
    let j_ep = ge / 8.0 - gp / 4.0;
    let s = spectrum(&qubit(j_ep, 0.0, ge, gp)).unwrap();
    assert_eq!(s.ep_order, 2);
    let want = -(3.0 * ge / 4.0 + gp / 2.0);
    assert!((want + 3.35).abs() < 1e-12);
    for &k in &s.coalescing {
        assert!((s.eigenvalues[k] - c(want, 0.0)).norm() < 1e-6);
    }
}

#[test]
fn zero_generator_is_a_degeneracy_not_an_ep() {
    let s = spectrum(&qubit(0.0, 0.0, 0.0, 0.0)).unwrap();
    assert_eq!(s.ep_order, 0);
    assert!(s.min_eigenvector_angle > 1.0);
}

#[test]
fn steady_state_examples() {
    let ground = steady_state(&qubit(0.0, 0.0, 4.0, 0.0)).unwrap();
    assert!((&ground - &ComplexMatrix::diagonal(&[c(1.0, 0.0), c(0.0, 0.0)])).max_abs() < 1e-12);

    let rho = steady_state(&qubit(1.0, 0.0, 4.0, 0.0)).unwrap();
    let want = ComplexMatrix::from_rows(&[[c(20.0, 0.0), c(0.0, 8.0)], [c(0.0, -8.0), c(4.0, 0.0)]])
        .unwrap()
        .scale_real(1.0 / 24.0);
    assert!((&rho - &want).max_abs() < 1e-12);
    assert!((rho[(1, 1)].re - 1.0 / 6.0).abs() < 1e-12);

    // Populations approach 1/2; the coherence decays only as γe/4J.
    let strong = steady_state(&qubit(100.0, 0.0, 4.0, 0.0)).unwrap();
    assert!((strong[(0, 0)].re - 0.5).abs() < 1e-3);
    assert!((strong[(1, 1)].re - 0.5).abs() < 1e-3);
    assert!((strong[(0, 1)] - c(0.0, 800.0 / 80016.0)).norm() < 1e-12);
}

#[test]
fn qutrit_spectrum_contains_both_coalescences() {
    let ge = 4.5;
    // Coherence block [[0, iJ], [iJ, −γe/2]] coalesces at J = γe/4.
    let s = spectrum(&qutrit(ge / 4.0, ge)).unwrap();
    assert_eq!(s.ep_order, 2);
    for &k in &s.coalescing {
        assert!((s.eigenvalues[k] - c(-ge / 4.0, 0.0)).norm() < 1e-6);
    }
    let s = spectrum(&qutrit(ge / 8.0, ge)).unwrap();
    assert_eq!(s.ep_order, 2);
    for &k in &s.coalescing {
        assert!((s.eigenvalues[k] - c(-0.75 * ge, 0.0)).norm() < 1e-6);
    }
}

#[test]
fn tracked_branches_are_continuous() {
    let points: Vec<Vec<Complex64>> = (0..=200)
        .map(|k| spectrum(&qubit(k as f64 * 0.01, 0.0, 4.5, 0.0)).unwrap().eigenvalues)
        .collect();
    for b in track_branches(&points) {
        for w in b.windows(2) {
            assert!((w[1] - w[0]).norm() < 0.5);
        }
    }
}

fn row(ge: f64, gp: f64) -> EpMap {
    let sys = QuantumSystem::qubit(0.0, 0.0, ge, gp).unwrap();
    ep_scan(&sys, &ScanGrid::row(ScanAxis::new(0.0, 2.0, 201).unwrap(), 0.0).unwrap()).unwrap()
}

#[test]
fn resonant_row_has_one_ep() {
    let map = row(4.5, 0.0);
    let pts: Vec<_> = map.ep_points().collect();
    assert_eq!(pts.len(), 1);
    assert!((pts[0].j - 0.5625).abs() < 1e-9);

    let map = row(4.4, 0.1);
    let pts: Vec<_> = map.ep_points().collect();
    assert_eq!(pts.len(), 1);
    assert!((pts[0].j - 0.525).abs() < 1e-9);
    assert!((pts[0].re_lambda + 3.35).abs() < 1e-5);
}

#[test]
fn no_ep_without_loss_contrast() {
    assert!(row(2.0, 1.0).is_empty());
}

#[test]
fn ep_map_csv_has_expected_columns() {
    let sys = QuantumSystem::qubit(0.0, 0.0, 4.5, 0.0).unwrap();
    let grid = ScanGrid::new(ScanAxis::new(0.0, 1.0, 3).unwrap(), ScanAxis::new(-1.0, 1.0, 2).unwrap()).unwrap();
    let csv = ep_scan(&sys, &grid).unwrap().to_csv();
    assert_eq!(csv.len(), 6);
    let h = csv.header();
    assert_eq!(h.len(), 2 + 8 + 3);
    assert_eq!(h[2], "re_lambda_0");
    assert_eq!(h[6], "im_lambda_0");
    assert_eq!(h[12], "ep_order");
}

/// Triple-root location of the resonant-to-detuned qubit's non-zero cubic
/// `−μ³ + 2aμ² − (5a²/4 + 4J² + Δ²)μ + a³/4 + 2aJ² + aΔ²` (with `λ = −μ`,
/// `a = γe`, `γφ = 0`), matched against `−(μ − μ₀)³`.
fn third_order_oracle(a: f64) -> (f64, f64, f64) {
    let (j, d, mu0) = (a / 54f64.sqrt(), a / 108f64.sqrt(), 2.0 * a / 3.0);
    assert!((3.0 * mu0 - 2.0 * a).abs() < 1e-12);
    assert!((3.0 * mu0 * mu0 - (1.25 * a * a + 4.0 * j * j + d * d)).abs() < 1e-12);
    assert!((mu0.powi(3) - (0.25 * a.powi(3) + 2.0 * a * j * j + a * d * d)).abs() < 1e-12);
    (j, d, -mu0)
}

#[test]
fn full_map_has_triangle_structure() {
    let a = 4.5;
    let sys = QuantumSystem::qubit(0.0, 0.0, a, 0.0).unwrap();
    let grid = ScanGrid::new(ScanAxis::new(0.0, 1.2, 121).unwrap(), ScanAxis::new(-1.0, 1.0, 101).unwrap()).unwrap();
    let map = ep_scan(&sys, &grid).unwrap();

    assert_eq!(map.ep_lines.len(), 3);
    assert_eq!(map.ep3_points.len(), 2);

    let (j3, d3, l3) = third_order_oracle(a);
    for (p, sign) in map.ep3_points.iter().zip([-1.0, 1.0]) {
        assert!((p.j - j3).abs() < 1e-8, "{p:?}");
        assert!((p.delta - sign * d3).abs() < 1e-8, "{p:?}");
        assert!((p.lambda - l3).abs() < 1e-8, "{p:?}");
    }

    // Mirror symmetry under Δ → −Δ within one grid step.
    let res = grid.j.step().max(grid.delta.step());
    let pts: Vec<&EpPoint> = map.ep_points().collect();
    for p in &pts {
        let nearest = pts
            .iter()
            .map(|q| ((q.j - p.j).powi(2) + (q.delta + p.delta).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= res, "no mirror for {p:?}");
    }

    // Every line point is a double root of the cubic: its discriminant vanishes.
    for p in &pts {
        let (j2, d2) = (p.j * p.j, p.delta * p.delta);
        let (ca, cb, cc, cd) = (-1.0, 2.0 * a, -(1.25 * a * a + 4.0 * j2 + d2), 0.25 * a.powi(3) + 2.0 * a * j2 + a * d2);
        let terms = [
            18.0 * ca * cb * cc * cd,
            -4.0 * cb.powi(3) * cd,
            cb * cb * cc * cc,
            -4.0 * ca * cc.powi(3),
            -27.0 * ca * ca * cd * cd,
        ];
        let disc: f64 = terms.iter().sum();
        let scale: f64 = terms.iter().map(|t| t.abs()).sum();
        assert!(disc.abs() <= 1e-9 * scale, "{p:?}: {disc}");
    }
    // Near the origin the lines follow |Δ| ≈ 4J²/γe.
    for p in pts.iter().filter(|p| p.kind == 1 && p.j < 0.1) {
        assert!((p.delta.abs() - 4.0 * p.j * p.j / a).abs() < 0.01 * p.delta.abs(), "{p:?}");
    }
}
