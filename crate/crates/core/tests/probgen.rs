mod common;

use common::fixed;
use proptest::prelude::*;
use spilloverfree::probgen::{draw_pencil, generate_pencil, perturb_targets, MIN_TARGET_MODULUS};
use spilloverfree::{generate_scenario, solve_spectrum, Error, ProblemSpec, Tolerances};

proptest! {
    #![proptest_config(fixed(40, 0x9e7))]

    #[test]
    fn targets_are_conjugate_closed_and_nonzero(
        n_u in 6usize..=14, n_phi in 1usize..=4, p_idx in 0usize..3,
        s_shift in 0usize..=2, seed in any::<u64>(),
    ) {
        let p: usize = [2, 4, 6][p_idx];
        let s = p / 2;
        let s_tilde = s.saturating_sub(s_shift);
        let spec = ProblemSpec { n_u, n_phi, p, s, s_tilde, max_perturbation: 0.3, seed };
        let sc = match generate_scenario(&spec) {
            Ok(sc) => sc,
            Err(Error::StructureInfeasible(_)) => return Err(TestCaseError::reject("too few pairs")),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let t = sc.target.eigenvalues();
        prop_assert_eq!(t.len(), p);
        prop_assert_eq!(sc.target.s(), s_tilde);
        for v in &t {
            prop_assert!(v.norm() >= MIN_TARGET_MODULUS);
            if v.im != 0.0 {
                prop_assert!(t.iter().any(|w| *w == v.conj()));
            }
        }
        for v in sc.retained.eigenvalues() {
            prop_assert!(t.iter().all(|w| (w - v).norm() > 1e-8 * v.norm()));
        }
    }

    #[test]
    fn generation_is_deterministic(n_u in 4usize..=10, n_phi in 1usize..=3, seed in any::<u64>()) {
        let spec = ProblemSpec { n_u, n_phi, p: 2, s: 0, s_tilde: 0, max_perturbation: 0.2, seed };
        match (generate_scenario(&spec), generate_scenario(&spec)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(&a.pencil, &b.pencil);
                prop_assert_eq!(&a.target, &b.target);
                prop_assert_eq!(&a.theta, &b.theta);
                prop_assert_eq!(a.old.x(), b.old.x());
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "one run failed, the other succeeded"),
        }
    }
}

#[test]
fn single_draws_at_full_scale_are_admissible() {
    let tol = Tolerances::default();
    let ok = (0..100u64)
        .filter(|&seed| {
            draw_pencil(100, 40, seed)
                .and_then(|p| solve_spectrum(&p, &tol))
                .is_ok()
        })
        .count();
    assert!(ok >= 95, "only {ok} of 100 draws admissible");
}

#[test]
fn generate_pencil_is_valid() {
    let p = generate_pencil(&ProblemSpec::same_structure(1)).unwrap();
    assert_eq!((p.n_u(), p.n_phi()), (100, 40));
}

#[test]
fn bad_specs_are_rejected() {
    let base = ProblemSpec::same_structure(0);
    for bad in [
        ProblemSpec { p: 0, ..base.clone() },
        ProblemSpec { p: 101, ..base.clone() },
        ProblemSpec { s: 4, ..base.clone() },
        ProblemSpec { max_perturbation: -1.0, ..base.clone() },
        ProblemSpec { n_u: 0, ..base.clone() },
    ] {
        assert!(matches!(generate_scenario(&bad), Err(Error::InvalidConfig(_))), "{bad:?}");
    }
    let old = [faer::c64::new(1.0, 0.0)];
    assert!(matches!(
        perturb_targets(&old, 1, 0.1, 0, &[]),
        Err(Error::StructureInfeasible(_))
    ));
}
