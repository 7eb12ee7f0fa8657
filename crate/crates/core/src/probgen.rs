//! Seeded random pencils and target eigenvalue sets.

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::rcond;
use crate::pencil::{solve_spectrum, SpectrumResult, StructuredPencil};
use crate::spectral::{
    check_target_disjointness, retained_eigendata, select_eigendata, RealSpectralData,
    RetainedData, Selection, SpectralBlocks,
};

/// Size and randomness of a generated problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub n_u: usize,
    pub n_phi: usize,
    /// Number of eigenvalues replaced.
    pub p: usize,
    /// Conjugate pairs among the replaced eigenvalues.
    pub s: usize,
    /// Conjugate pairs among the targets.
    pub s_tilde: usize,
    /// Bound on |λ̃ − λ| when the pair count is unchanged.
    pub max_perturbation: f64,
    pub seed: u64,
}

impl ProblemSpec {
    /// n_u = 100, n_phi = 40, two pairs and two reals replaced by the same
    /// structure, |Δλ| ≤ 0.3.
    pub fn same_structure(seed: u64) -> Self {
        Self {
            n_u: 100,
            n_phi: 40,
            p: 6,
            s: 2,
            s_tilde: 2,
            max_perturbation: 0.3,
            seed,
        }
    }

    /// As [`ProblemSpec::same_structure`] but the targets are one pair and four reals.
    pub fn restructured(seed: u64) -> Self {
        Self {
            s_tilde: 1,
            ..Self::same_structure(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_u == 0 {
            return Err(Error::InvalidConfig("n_u must be positive".into()));
        }
        if self.p == 0 || self.p > self.n_u {
            return Err(Error::InvalidConfig(format!(
                "p must satisfy 1 ≤ p ≤ n_u = {}, got {}",
                self.n_u, self.p
            )));
        }
        if 2 * self.s > self.p || 2 * self.s_tilde > self.p {
            return Err(Error::InvalidConfig(format!(
                "pair counts s = {}, s̃ = {} do not fit in p = {}",
                self.s, self.s_tilde, self.p
            )));
        }
        if !(self.max_perturbation >= 0.0 && self.max_perturbation.is_finite()) {
            return Err(Error::InvalidConfig("max perturbation must be ≥ 0".into()));
        }
        Ok(())
    }
}

const MAX_ATTEMPTS: usize = 16;
/// Targets with smaller modulus are redrawn.
pub const MIN_TARGET_MODULUS: f64 = 1e-3;

fn attempt_seed(seed: u64, attempt: usize) -> u64 {
    seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn sym_uniform(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Mat<f64> {
    let a = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
    Mat::from_fn(n, n, |i, j| 0.5 * scale * (a[(i, j)] + a[(j, i)]))
}

/// One draw of the random pencil, without the retry loop of
/// [`generate_pencil`].
pub fn draw_pencil(n_u: usize, n_phi: usize, seed: u64) -> Result<StructuredPencil> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_u + n_phi;
    let mut m_u = sym_uniform(&mut rng, n_u, 1.0);
    for i in 0..n_u {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        m_u[(i, i)] += sign * n_u as f64;
    }
    let nf = n as f64;
    let mut k = sym_uniform(&mut rng, n, nf.sqrt());
    for i in n_u..n {
        k[(i, i)] += nf.powf(1.5);
    }
    StructuredPencil::new(m_u, k, n_u, n_phi)
}

/// Draws M_u = sym(U[−1,1]) + n_u·diag(±1) and K = √n·sym(U[−1,1]) with
/// n^{3/2} added to the K_φ diagonal, redrawing (with a shifted seed) until
/// the finite spectrum is simple and nonzero.
pub fn generate_pencil(spec: &ProblemSpec) -> Result<StructuredPencil> {
    let tol = Tolerances::default();
    for attempt in 0..MAX_ATTEMPTS {
        let seed = attempt_seed(spec.seed, attempt);
        let Ok(p) = draw_pencil(spec.n_u, spec.n_phi, seed) else {
            continue;
        };
        match solve_spectrum(&p, &tol) {
            Ok(_) => return Ok(p),
            Err(e) => log::debug!("seed {seed}: {e}; redrawing"),
        }
    }
    Err(Error::GenerationFailed {
        attempts: MAX_ATTEMPTS,
    })
}

fn too_close(v: c64, others: &[c64], tol: &Tolerances) -> bool {
    others
        .iter()
        .any(|o| (v - o).norm() <= tol.matching_rel.max(1e-6) * v.norm().max(o.norm()).max(1e-3))
}

/// Draws a conjugate-closed target set of the same size as `old` with
/// `s_tilde` pairs. When the pair count matches `old`, each target lies within
/// `max_perturbation` of the eigenvalue it replaces; otherwise targets are
/// drawn from the box |Re| ≤ R, 0.1R ≤ Im ≤ R (R = max |old| +
/// max_perturbation). Targets are nonzero, simple and avoid `avoid`.
pub fn perturb_targets(
    old: &[c64],
    s_tilde: usize,
    max_perturbation: f64,
    seed: u64,
    avoid: &[c64],
) -> Result<Vec<c64>> {
    let tol = Tolerances::default();
    let blocks = SpectralBlocks::from_complex(old, &tol)
        .map_err(|e| Error::StructureInfeasible(format!("old eigenvalues unusable: {e}")))?;
    let p = old.len();
    if 2 * s_tilde > p {
        return Err(Error::StructureInfeasible(format!(
            "{s_tilde} conjugate pairs need at least {} eigenvalues, only {p} replaced",
            2 * s_tilde
        )));
    }
    if !(max_perturbation >= 0.0 && max_perturbation.is_finite()) {
        return Err(Error::InvalidConfig("max perturbation must be ≥ 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken: Vec<c64> = avoid.to_vec();
    let mut out = Vec::with_capacity(p);
    const TRIES: usize = 10_000;

    if s_tilde == blocks.s() {
        if max_perturbation == 0.0 {
            return Ok(blocks.eigenvalues());
        }
        for v in blocks.blocks().iter().map(|b| b.leading()) {
            let is_pair = v.im > 0.0;
            let mut found = None;
            for _ in 0..TRIES {
                let cand = if is_pair {
                    let r = max_perturbation * rng.random::<f64>().sqrt();
                    let t = rng.random_range(0.0..std::f64::consts::TAU);
                    v + c64::new(r * t.cos(), r * t.sin())
                } else {
                    c64::new(v.re + rng.random_range(-max_perturbation..=max_perturbation), 0.0)
                };
                if is_pair && cand.im <= MIN_TARGET_MODULUS {
                    continue;
                }
                if cand.norm() < MIN_TARGET_MODULUS || too_close(cand, &taken, &tol) {
                    continue;
                }
                found = Some(cand);
                break;
            }
            let c = found.ok_or_else(|| {
                Error::StructureInfeasible(format!(
                    "no admissible target within {max_perturbation} of {v}"
                ))
            })?;
            taken.push(c);
            out.push(c);
            if is_pair {
                taken.push(c.conj());
                out.push(c.conj());
            }
        }
    } else {
        let r = old.iter().fold(0.0_f64, |m, v| m.max(v.norm())) + max_perturbation;
        for k in 0..(p - s_tilde) {
            let is_pair = k < s_tilde;
            let mut found = None;
            for _ in 0..TRIES {
                let re = rng.random_range(-r..=r);
                let cand = if is_pair {
                    c64::new(re, rng.random_range(0.1 * r..=r))
                } else {
                    c64::new(re, 0.0)
                };
                if cand.norm() < MIN_TARGET_MODULUS || too_close(cand, &taken, &tol) {
                    continue;
                }
                found = Some(cand);
                break;
            }
            let c = found.ok_or_else(|| {
                Error::StructureInfeasible("no admissible target in the sampling box".into())
            })?;
            taken.push(c);
            out.push(c);
            if is_pair {
                taken.push(c.conj());
                out.push(c.conj());
            }
        }
    }
    Ok(SpectralBlocks::from_complex(&out, &tol)?.eigenvalues())
}

/// The `s` conjugate pairs and `p − 2s` real eigenvalues of largest modulus.
pub fn pick_selection(spectrum: &SpectrumResult, p: usize, s: usize) -> Result<Vec<c64>> {
    if 2 * s > p {
        return Err(Error::StructureInfeasible(format!("{s} pairs do not fit in p = {p}")));
    }
    let mut pairs: Vec<c64> = spectrum
        .eigenvalues()
        .into_iter()
        .filter(|v| v.im > 0.0)
        .collect();
    let mut reals: Vec<c64> = spectrum
        .eigenvalues()
        .into_iter()
        .filter(|v| v.im == 0.0)
        .collect();
    let by_modulus = |a: &c64, b: &c64| b.norm().partial_cmp(&a.norm()).unwrap();
    pairs.sort_by(by_modulus);
    reals.sort_by(by_modulus);
    if pairs.len() < s || reals.len() < p - 2 * s {
        return Err(Error::StructureInfeasible(format!(
            "spectrum has {} pairs and {} reals; need {s} and {}",
            pairs.len(),
            reals.len(),
            p - 2 * s
        )));
    }
    let mut out = Vec::with_capacity(p);
    for v in &pairs[..s] {
        out.push(*v);
        out.push(v.conj());
    }
    out.extend_from_slice(&reals[..p - 2 * s]);
    Ok(out)
}

/// A random nonsingular Θ with entries uniform on [−1, 1] (redrawn until
/// its reciprocal condition number is at least 1e−2).
pub fn random_theta(p: usize, seed: u64) -> Mat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let t = Mat::from_fn(p, p, |_, _| rng.random_range(-1.0..=1.0));
        if rcond(t.as_ref()) >= 1e-2 {
            return t;
        }
    }
}

/// Everything needed to run one embedding experiment.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ProblemSpec,
    pub pencil: StructuredPencil,
    pub spectrum: SpectrumResult,
    /// (Λ₁, X₁).
    pub old: RealSpectralData,
    pub selection: Selection,
    pub retained: RetainedData,
    pub target: SpectralBlocks,
    pub theta: Mat<f64>,
}

const TARGET_STREAM: u64 = 0x5DEE_CE66_D1CE_4E5B;
const THETA_STREAM: u64 = 0xA076_1D64_78BD_642F;

pub fn generate_scenario(spec: &ProblemSpec) -> Result<Scenario> {
    spec.validate()?;
    let tol = Tolerances::default();
    let pencil = generate_pencil(spec)?;
    let spectrum = solve_spectrum(&pencil, &tol)?;
    let chosen = pick_selection(&spectrum, spec.p, spec.s)?;
    let (old, selection) = select_eigendata(&spectrum, &chosen, &tol)?;
    let retained = retained_eigendata(&spectrum, &selection, &tol)?;
    let kept = retained.eigenvalues();
    let targets = perturb_targets(
        &old.values().eigenvalues(),
        spec.s_tilde,
        spec.max_perturbation,
        spec.seed ^ TARGET_STREAM,
        &kept,
    )?;
    let target = SpectralBlocks::from_complex(&targets, &tol)?;
    check_target_disjointness(&target, &kept, &tol)?;
    Ok(Scenario {
        spec: spec.clone(),
        pencil,
        spectrum,
        old,
        selection,
        retained,
        target,
        theta: random_theta(spec.p, spec.seed ^ THETA_STREAM),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_pencil() {
        let spec = ProblemSpec {
            n_u: 2,
            n_phi: 1,
            p: 1,
            s: 0,
            s_tilde: 0,
            max_perturbation: 0.1,
            seed: 3,
        };
        let p = generate_pencil(&spec).unwrap();
        assert_eq!(p.n(), 3);
        assert_eq!(p, generate_pencil(&spec).unwrap());
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let old = vec![c64::new(0.2, 0.5), c64::new(0.2, -0.5), c64::new(0.3, 0.0)];
        let t = perturb_targets(&old, 1, 0.0, 1, &[]).unwrap();
        assert_eq!(t, vec![c64::new(0.2, 0.5), c64::new(0.2, -0.5), c64::new(0.3, 0.0)]);
    }

    #[test]
    fn restructured_targets() {
        let old = vec![
            c64::new(0.1, 0.8),
            c64::new(0.1, -0.8),
            c64::new(0.2, 0.3),
            c64::new(0.2, -0.3),
            c64::new(0.6, 0.0),
            c64::new(0.35, 0.0),
        ];
        let t = perturb_targets(&old, 1, 0.3, 9, &[]).unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(t.iter().filter(|v| v.im != 0.0).count(), 2);
        assert!(matches!(
            perturb_targets(&old, 4, 0.3, 9, &[]),
            Err(Error::StructureInfeasible(_))
        ));
    }

    #[test]
    fn spec_validation() {
        let mut s = ProblemSpec::same_structure(0);
        assert!(s.validate().is_ok());
        s.p = 101;
        assert!(s.validate().is_err());
        let mut s = ProblemSpec::same_structure(0);
        s.s_tilde = 4;
        assert!(s.validate().is_err());
    }
}
