//! Helpers shared by the integration tests: an independent random pencil
//! source, a dense eigenvalue oracle and fixed-seed proptest settings.
#![allow(dead_code)]

use faer::prelude::*;
use faer::{c64, Mat, MatRef};
use proptest::test_runner::{Config, RngSeed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use spilloverfree::{generate_scenario, Error, ProblemSpec, Scenario, StructuredPencil};

/// Proptest settings with a pinned RNG seed and no failure persistence.
pub fn fixed(cases: u32, seed: u64) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    }
}

fn sym(rng: &mut ChaCha20Rng, n: usize) -> Mat<f64> {
    let a = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// Random symmetric pencil with an indefinite, well-conditioned M_u and a
/// diagonally shifted K_φ. Deliberately unrelated to the library generator.
pub fn random_pencil(n_u: usize, n_phi: usize, seed: u64) -> StructuredPencil {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = n_u + n_phi;
    let mut m_u = sym(&mut rng, n_u);
    for i in 0..n_u {
        m_u[(i, i)] += if i % 2 == 0 { 3.0 } else { -3.0 };
    }
    let mut k = sym(&mut rng, n);
    for i in 0..n {
        k[(i, i)] += if i >= n_u { 4.0 } else { 0.5 };
    }
    StructuredPencil::new(m_u, k, n_u, n_phi).expect("well-conditioned by construction")
}

pub fn full_mass(m_u: MatRef<'_, f64>, n: usize) -> Mat<f64> {
    let n_u = m_u.nrows();
    let mut m = Mat::zeros(n, n);
    m.as_mut().submatrix_mut(0, 0, n_u, n_u).copy_from(m_u);
    m
}

/// Dense oracle: eigenvalues μ of K⁻¹M on the full n×n pencil. Nonzero μ give
/// finite λ = −1/μ; the count of (numerically) zero μ is the number of
/// eigenvalues at infinity.
pub fn oracle_spectrum(m_u: MatRef<'_, f64>, k: MatRef<'_, f64>, n_phi: usize) -> (Vec<c64>, usize) {
    let n = k.nrows();
    let m = full_mass(m_u, n);
    let kinv_m = k.partial_piv_lu().solve(&m);
    let mut mu = kinv_m.eigenvalues().expect("dense eigenvalues");
    mu.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    let scale = mu.last().map(|v| v.norm()).unwrap_or(1.0);
    let zeros = mu.iter().filter(|v| v.norm() <= 1e-10 * scale).count();
    let finite = mu[n_phi.min(n)..].iter().map(|v| -v.inv()).collect();
    (finite, zeros)
}

/// Largest relative distance after greedily pairing each value of `a` with
/// its nearest unused value of `b`; infinite when the sizes differ.
pub fn multiset_distance(a: &[c64], b: &[c64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for &x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|u, v| u.1.partial_cmp(&v.1).unwrap())
            .unwrap();
        used[j] = true;
        worst = worst.max(d / x.norm().max(1e-300));
    }
    worst
}

pub fn spectral_norm(a: MatRef<'_, f64>) -> f64 {
    spilloverfree::linalg::spectral_norm(a)
}

pub fn rel_diff(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    spectral_norm((a - b).as_ref()) / spectral_norm(b)
}

/// A small generated scenario with `p` replaced eigenvalues. The pair count
/// is the largest that the spectrum supports.
pub fn small_scenario(n_u: usize, n_phi: usize, p: usize, seed: u64) -> Option<Scenario> {
    for s in (0..=p / 2).rev() {
        let spec = ProblemSpec {
            n_u,
            n_phi,
            p,
            s,
            s_tilde: s,
            max_perturbation: 0.2,
            seed,
        };
        match generate_scenario(&spec) {
            Ok(sc) => return Some(sc),
            Err(Error::StructureInfeasible(_)) | Err(Error::GenerationFailed { .. }) => continue,
            Err(e) => panic!("unexpected generation error: {e}"),
        }
    }
    None
}
