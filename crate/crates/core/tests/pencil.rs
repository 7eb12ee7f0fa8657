mod common;

use common::{fixed, full_mass, multiset_distance, oracle_spectrum, random_pencil};
use faer::{c64, Mat};
use proptest::prelude::*;
use spilloverfree::pencil::{
    check_jordan_pair, schur_reduce, JordanPairCandidate, COND_BLOCK_FORM, COND_FINITE,
    COND_INFINITE, COND_J1, COND_RANK,
};
use spilloverfree::{solve_spectrum, Tolerances};

proptest! {
    #![proptest_config(fixed(24, 0x5c4e))]

    #[test]
    fn schur_complement_preserves_determinant(
        n_u in 1usize..=5, n_phi in 1usize..=3, seed in any::<u64>(),
        lambdas in prop::collection::vec(-2.0f64..2.0, 10),
    ) {
        let p = random_pencil(n_u, n_phi, seed);
        let r = schur_reduce(&p).unwrap();
        let det_kphi = p.k_phi().determinant();
        let m = full_mass(p.m_u(), p.n());
        for l in lambdas {
            let full = (&m * l + p.k()).determinant();
            let reduced = det_kphi * (p.m_u() * l + &r.s).determinant();
            let scale = full.abs().max(reduced.abs()).max(1e-300);
            prop_assert!((full - reduced).abs() <= 1e-10 * scale, "λ={l}: {full} vs {reduced}");
        }
    }

    #[test]
    fn finite_spectrum_matches_dense_oracle(
        n_u in 1usize..=8, n_phi in 1usize..=4, seed in any::<u64>(),
    ) {
        let p = random_pencil(n_u, n_phi, seed);
        let Ok(spec) = solve_spectrum(&p, &Tolerances::default()) else {
            return Err(TestCaseError::reject("degenerate spectrum"));
        };
        prop_assert_eq!(spec.finite.len(), n_u);
        prop_assert_eq!(spec.infinite_basis.ncols(), n_phi);
        let (oracle, zeros) = oracle_spectrum(p.m_u(), p.k(), n_phi);
        prop_assert_eq!(zeros, n_phi);
        let d = multiset_distance(&spec.eigenvalues(), &oracle);
        prop_assert!(d <= 1e-8, "distance {d}");
    }

    #[test]
    fn complex_eigenvalues_come_in_conjugate_pairs(
        n_u in 2usize..=8, n_phi in 1usize..=4, seed in any::<u64>(),
    ) {
        let p = random_pencil(n_u, n_phi, seed);
        let Ok(spec) = solve_spectrum(&p, &Tolerances::default()) else {
            return Err(TestCaseError::reject("degenerate spectrum"));
        };
        let f = &spec.finite;
        let mut i = 0;
        while i < f.len() {
            if f[i].value.im != 0.0 {
                prop_assert!(f[i].value.im > 0.0);
                prop_assert_eq!(f[i + 1].value, f[i].value.conj());
                for r in 0..f[i].vector.nrows() {
                    let d = (f[i + 1].vector[r] - f[i].vector[r].conj()).norm();
                    prop_assert!(d <= 1e-10);
                }
                i += 2;
            } else {
                i += 1;
            }
        }
    }

    #[test]
    fn infinite_basis_is_exact_kernel_of_mass(
        n_u in 1usize..=8, n_phi in 1usize..=4, seed in any::<u64>(),
    ) {
        let p = random_pencil(n_u, n_phi, seed);
        let Ok(spec) = solve_spectrum(&p, &Tolerances::default()) else {
            return Err(TestCaseError::reject("degenerate spectrum"));
        };
        let mx = p.apply_mass(spec.infinite_basis.as_ref());
        prop_assert!(mx.col_iter().all(|c| c.iter().all(|v| *v == 0.0)));
        let expected = Mat::from_fn(p.n(), n_phi, |i, j| if i == n_u + j { 1.0 } else { 0.0 });
        prop_assert_eq!(&spec.infinite_basis, &expected);
    }
}

proptest! {
    #![proptest_config(fixed(20, 0x10a2))]

    #[test]
    fn solved_jordan_pair_passes_all_conditions(
        n_u in 2usize..=10, n_phi in 1usize..=5, seed in any::<u64>(),
    ) {
        let p = random_pencil(n_u, n_phi, seed);
        let Ok(spec) = solve_spectrum(&p, &Tolerances::default()) else {
            return Err(TestCaseError::reject("degenerate spectrum"));
        };
        let c = spec.real_jordan_pair().unwrap();
        let r = check_jordan_pair(&p, &c, 1e-10).unwrap();
        prop_assert!(r.passed(), "{:?}", r);
        for name in [COND_FINITE, COND_INFINITE, COND_RANK, COND_J1, COND_BLOCK_FORM] {
            prop_assert!(r.get(name).is_some(), "{name} not evaluated");
        }
    }
}

fn solved(seed: u64) -> (spilloverfree::StructuredPencil, JordanPairCandidate) {
    let p = random_pencil(5, 2, seed);
    let spec = solve_spectrum(&p, &Tolerances::default()).unwrap();
    let c = spec.real_jordan_pair().unwrap();
    assert!(check_jordan_pair(&p, &c, 1e-10).unwrap().passed());
    (p, c)
}

fn failed(p: &spilloverfree::StructuredPencil, c: &JordanPairCandidate) -> Vec<&'static str> {
    check_jordan_pair(p, c, 1e-10)
        .unwrap()
        .failed()
        .map(|c| c.name)
        .collect()
}

#[test]
fn perturbed_finite_vector_violates_eigen_relation() {
    let (p, mut c) = solved(1);
    c.x_mut()[(0, 0)] += 1e-3;
    let f = failed(&p, &c);
    assert!(f.contains(&COND_FINITE), "{f:?}");
}

#[test]
fn infinite_vector_outside_kernel_is_detected() {
    let (p, mut c) = solved(2);
    let q = c.j1().nrows();
    c.x_mut()[(0, q)] = 0.5;
    let f = failed(&p, &c);
    assert!(f.contains(&COND_INFINITE), "{f:?}");
    assert!(f.contains(&COND_BLOCK_FORM), "{f:?}");
}

#[test]
fn repeated_column_is_rank_deficient() {
    let (p, mut c) = solved(3);
    let x = c.x().to_owned();
    c.x_mut().col_mut(1).copy_from(x.col(0));
    let f = failed(&p, &c);
    assert!(f.contains(&COND_RANK), "{f:?}");
}

#[test]
fn singular_j1_is_detected() {
    let (p, c) = solved(4);
    let mut j1 = c.j1().to_owned();
    let q = j1.nrows();
    j1.as_mut().row_mut(q - 1).fill(0.0);
    j1.as_mut().col_mut(q - 1).fill(0.0);
    let bad = JordanPairCandidate::new(c.x().to_owned(), j1, c.n_infinite()).unwrap();
    let f = failed(&p, &bad);
    assert!(f.contains(&COND_J1), "{f:?}");
}

#[test]
fn wrong_eigenvalue_block_is_detected() {
    let (p, c) = solved(5);
    let mut j1 = c.j1().to_owned();
    j1[(0, 0)] *= 1.01;
    let bad = JordanPairCandidate::new(c.x().to_owned(), j1, c.n_infinite()).unwrap();
    assert!(failed(&p, &bad).contains(&COND_FINITE));
}

#[test]
fn oracle_agrees_on_a_hand_built_pencil() {
    // M_u = I, K = diag(2, 4, 1): finite eigenvalues −2 and −4
    let mut k = Mat::<f64>::zeros(3, 3);
    k[(0, 0)] = 2.0;
    k[(1, 1)] = 4.0;
    k[(2, 2)] = 1.0;
    let (fin, zeros) = oracle_spectrum(Mat::<f64>::identity(2, 2).as_ref(), k.as_ref(), 1);
    assert_eq!(zeros, 1);
    let d = multiset_distance(&fin, &[c64::new(-2.0, 0.0), c64::new(-4.0, 0.0)]);
    assert!(d < 1e-14);
}
