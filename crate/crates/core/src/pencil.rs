//! The structured pencil λM + K with M = diag(M_u, 0), its regularity
//! certificate, finite/infinite spectrum and Jordan-pair checks.

use faer::prelude::*;
use faer::{c64, Col, Mat, MatRef};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{
    guarded_solve, is_finite, numerical_rank, rcond, relative_asymmetry, spectral_norm, symmetrize,
};
use crate::spectral::{to_real_representation, EigenPair};

/// Undamped piezoelectric pencil λ·diag(M_u, 0) + K.
///
/// The singular mass matrix is never stored; [`StructuredPencil::apply_mass`]
/// applies it blockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredPencil {
    n_u: usize,
    n_phi: usize,
    m_u: Mat<f64>,
    k: Mat<f64>,
}

impl StructuredPencil {
    /// Validates with default tolerances. See [`validate_pencil`].
    pub fn new(m_u: Mat<f64>, k: Mat<f64>, n_u: usize, n_phi: usize) -> Result<Self> {
        validate_pencil(m_u.as_ref(), k.as_ref(), n_u, n_phi, &Tolerances::default())
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n(&self) -> usize {
        self.n_u + self.n_phi
    }

    pub fn m_u(&self) -> MatRef<'_, f64> {
        self.m_u.as_ref()
    }

    pub fn k(&self) -> MatRef<'_, f64> {
        self.k.as_ref()
    }

    pub fn k_u(&self) -> MatRef<'_, f64> {
        self.k.as_ref().submatrix(0, 0, self.n_u, self.n_u)
    }

    pub fn k_uphi(&self) -> MatRef<'_, f64> {
        self.k.as_ref().submatrix(0, self.n_u, self.n_u, self.n_phi)
    }

    pub fn k_phi(&self) -> MatRef<'_, f64> {
        self.k
            .as_ref()
            .submatrix(self.n_u, self.n_u, self.n_phi, self.n_phi)
    }

    /// M·X = [M_u X_u; 0].
    pub fn apply_mass(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(x.nrows(), self.n());
        let mut out = Mat::zeros(self.n(), x.ncols());
        let top = self.m_u.as_ref() * x.submatrix(0, 0, self.n_u, x.ncols());
        out.as_mut()
            .submatrix_mut(0, 0, self.n_u, x.ncols())
            .copy_from(&top);
        out
    }

    /// The full n×n mass matrix. Only for oracles and output; core
    /// operations use [`Self::apply_mass`].
    pub fn mass_matrix(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.n(), self.n());
        m.as_mut()
            .submatrix_mut(0, 0, self.n_u, self.n_u)
            .copy_from(&self.m_u);
        m
    }

    /// ‖M‖₂ = ‖M_u‖₂.
    pub fn mass_norm(&self) -> f64 {
        spectral_norm(self.m_u.as_ref())
    }

    pub fn stiffness_norm(&self) -> f64 {
        spectral_norm(self.k.as_ref())
    }

    /// Assembles a pencil from blocks that are already known to be symmetric
    /// and admissible (internal use after an update).
    pub(crate) fn from_parts_unchecked(m_u: Mat<f64>, k: Mat<f64>, n_u: usize) -> Self {
        let n_phi = k.nrows() - n_u;
        Self { n_u, n_phi, m_u, k }
    }
}

/// Checks dimensions, finiteness, symmetry and nonsingularity of `M_u` and
/// `K_phi`; together the latter two certify that det(λM + K) is not
/// identically zero.
pub fn validate_pencil(
    m_u: MatRef<'_, f64>,
    k: MatRef<'_, f64>,
    n_u: usize,
    n_phi: usize,
    tol: &Tolerances,
) -> Result<StructuredPencil> {
    let n = n_u + n_phi;
    if n_u == 0 {
        return Err(Error::dims("n_u must be positive"));
    }
    if m_u.nrows() != n_u || m_u.ncols() != n_u {
        return Err(Error::dims(format!(
            "M_u is {}x{}, expected {n_u}x{n_u}",
            m_u.nrows(),
            m_u.ncols()
        )));
    }
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::dims(format!(
            "K is {}x{}, expected {n}x{n} (n_u + n_phi)",
            k.nrows(),
            k.ncols()
        )));
    }
    if !is_finite(m_u) {
        return Err(Error::NonFinite("M_u"));
    }
    if !is_finite(k) {
        return Err(Error::NonFinite("K"));
    }
    for (name, a) in [("M_u", m_u), ("K", k)] {
        let asym = relative_asymmetry(a);
        if asym > tol.symmetry {
            return Err(Error::AsymmetricInput {
                matrix: name,
                asymmetry: asym,
                tolerance: tol.symmetry,
            });
        }
    }
    let m_u = symmetrize(m_u);
    let k = symmetrize(k);

    let rc = rcond(m_u.as_ref());
    if !(rc >= tol.nonsingular_rcond) {
        return Err(Error::SingularBlock {
            block: "M_u",
            rcond: rc,
            threshold: tol.nonsingular_rcond,
        });
    }
    let rc = rcond(k.as_ref().submatrix(n_u, n_u, n_phi, n_phi));
    if !(rc >= tol.nonsingular_rcond) {
        return Err(Error::SingularBlock {
            block: "K_phi",
            rcond: rc,
            threshold: tol.nonsingular_rcond,
        });
    }
    Ok(StructuredPencil { n_u, n_phi, m_u, k })
}

/// Schur complement of `K_phi` in `K` and the map recovering the electric
/// part of an eigenvector from its structural part.
#[derive(Debug, Clone)]
pub struct SchurReduction {
    /// S = K_u − K_uφ K_φ⁻¹ K_uφᵀ (symmetric, n_u × n_u).
    pub s: Mat<f64>,
    /// R = −K_φ⁻¹ K_uφᵀ (n_phi × n_u); x = [u; R u].
    pub recovery: Mat<f64>,
}

pub fn schur_reduce(p: &StructuredPencil) -> Result<SchurReduction> {
    if p.n_phi == 0 {
        return Ok(SchurReduction {
            s: p.k_u().to_owned(),
            recovery: Mat::zeros(0, p.n_u),
        });
    }
    // The pencil was validated against the same threshold; this only trips
    // if the caller built it with looser tolerances.
    let solved = guarded_solve(p.k_phi(), p.k_uphi().transpose(), f64::MIN_POSITIVE).map_err(
        |rc| Error::SingularBlock {
            block: "K_phi",
            rcond: rc,
            threshold: f64::MIN_POSITIVE,
        },
    )?;
    let s = symmetrize((p.k_u() - p.k_uphi() * &solved).as_ref());
    let recovery = -solved;
    Ok(SchurReduction { s, recovery })
}

/// Finite eigenpairs and the infinite (kernel) basis of a pencil.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Conjugate pairs adjacent, positive imaginary part first; sorted by
    /// real part, then |imaginary part|.
    pub finite: Vec<EigenPair>,
    /// [0; I_{n_phi}].
    pub infinite_basis: Mat<f64>,
    /// Distance from each finite eigenvalue to its nearest neighbour.
    pub margins: Vec<f64>,
    n_u: usize,
    n_phi: usize,
}

impl SpectrumResult {
    pub fn eigenvalues(&self) -> Vec<c64> {
        self.finite.iter().map(|e| e.value).collect()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.finite.iter().fold(0.0, |m, e| m.max(e.value.norm()))
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    /// The full real Jordan pair ([X_F, X_∞], diag(Λ_F, 0)) in real
    /// representation, finite blocks in canonical order.
    pub fn real_jordan_pair(&self) -> Result<JordanPairCandidate> {
        let finite = to_real_representation(&self.finite, &Tolerances::default())?;
        let x = crate::linalg::hstack(finite.x(), self.infinite_basis.as_ref());
        JordanPairCandidate::new(x, finite.values().matrix(), self.n_phi)
    }
}

/// Rotates `x` so its first significant entry is real and positive, then
/// scales it to unit 2-norm.
pub(crate) fn normalize_eigenvector(x: &mut [c64]) {
    let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    let big = x.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    // "first nonzero" with rounding noise ignored
    let pivot = x
        .iter()
        .find(|v| v.norm() >= 1e-6 * big)
        .copied()
        .unwrap_or(c64::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    for v in x.iter_mut() {
        *v = *v * phase / norm;
    }
}

fn sort_key(v: c64) -> (f64, f64) {
    (v.re, v.im.abs())
}

/// Computes all n_u finite eigenpairs through the Schur-complement pencil
/// (λ M_u + S) u = 0 and lifts them with x = [u; R u].
pub fn solve_spectrum(p: &StructuredPencil, tol: &Tolerances) -> Result<SpectrumResult> {
    let red = schur_reduce(p)?;
    let n_u = p.n_u;
    let (values, u) = reduced_eigen(p.m_u(), red.s.as_ref())?;

    let mut real: Vec<EigenPair> = Vec::new();
    let mut pos: Vec<EigenPair> = Vec::new();
    let mut neg: Vec<c64> = Vec::new();
    for (i, &lambda) in values.iter().enumerate() {
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            return Err(Error::DegenerateSpectrum("non-finite eigenvalue".into()));
        }
        if lambda.im < 0.0 && lambda.im.abs() > 1e-14 * lambda.norm() {
            neg.push(lambda);
            continue;
        }
        let mut x = lift(u.col(i), red.recovery.as_ref());
        normalize_eigenvector(&mut x);
        if lambda.im.abs() <= 1e-14 * lambda.norm() {
            let x: Vec<c64> = x.iter().map(|v| c64::new(v.re, 0.0)).collect();
            let x = renormalize(x);
            real.push(EigenPair::new(c64::new(lambda.re, 0.0), Col::from_fn(x.len(), |k| x[k])));
        } else {
            pos.push(EigenPair::new(lambda, Col::from_fn(x.len(), |k| x[k])));
        }
    }

    if pos.len() != neg.len() {
        return Err(Error::DegenerateSpectrum(format!(
            "{} eigenvalues with positive and {} with negative imaginary part",
            pos.len(),
            neg.len()
        )));
    }
    pos.sort_by(|a, b| sort_key(a.value).partial_cmp(&sort_key(b.value)).unwrap());
    let mut used = vec![false; neg.len()];
    let mut pairs: Vec<(EigenPair, EigenPair)> = Vec::with_capacity(pos.len());
    for e in pos {
        let target = e.value.conj();
        let best = (0..neg.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                (neg[a] - target)
                    .norm()
                    .partial_cmp(&(neg[b] - target).norm())
                    .unwrap()
            })
            .expect("counts checked above");
        let gap = (neg[best] - target).norm();
        if gap > 1e-6 * e.value.norm() {
            return Err(Error::DegenerateSpectrum(format!(
                "eigenvalue {} has no conjugate partner (closest differs by {gap:.3e})",
                e.value
            )));
        }
        used[best] = true;
        let partner = e.conjugate();
        pairs.push((e, partner));
    }

    // Merge pairs and reals into one ordered list.
    enum Item {
        Pair(EigenPair, EigenPair),
        Real(EigenPair),
    }
    let mut items: Vec<Item> = pairs
        .into_iter()
        .map(|(a, b)| Item::Pair(a, b))
        .chain(real.into_iter().map(Item::Real))
        .collect();
    let key = |it: &Item| match it {
        Item::Pair(a, _) => sort_key(a.value),
        Item::Real(a) => sort_key(a.value),
    };
    items.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    let mut finite = Vec::with_capacity(n_u);
    for it in items {
        match it {
            Item::Pair(a, b) => {
                finite.push(a);
                finite.push(b);
            }
            Item::Real(a) => finite.push(a),
        }
    }

    let values: Vec<c64> = finite.iter().map(|e| e.value).collect();
    let rho = values.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let floor = tol.degenerate_rel * rho;
    for v in &values {
        if v.norm() <= floor {
            return Err(Error::DegenerateSpectrum(format!("eigenvalue {v} is numerically zero")));
        }
    }
    let margins = min_gaps(&values);
    for (v, g) in values.iter().zip(&margins) {
        if *g <= floor {
            return Err(Error::DegenerateSpectrum(format!(
                "eigenvalue {v} is within {g:.3e} of another eigenvalue"
            )));
        }
    }

    let n_phi = p.n_phi;
    let mut infinite_basis = Mat::zeros(p.n(), n_phi);
    for j in 0..n_phi {
        infinite_basis[(n_u + j, j)] = 1.0;
    }
    Ok(SpectrumResult {
        finite,
        infinite_basis,
        margins,
        n_u,
        n_phi,
    })
}

/// Below this reciprocal condition number of M_u the QZ-based solver is
/// used instead of the (much faster) standard eigensolver on M_u⁻¹(−S).
const STANDARD_EIGEN_RCOND: f64 = 1e-6;

/// Eigenvalues λ and eigenvectors u of (λ M_u + S) u = 0.
fn reduced_eigen(m_u: MatRef<'_, f64>, s: MatRef<'_, f64>) -> Result<(Vec<c64>, Mat<c64>)> {
    fn fail(e: impl std::fmt::Debug) -> Error {
        Error::DegenerateSpectrum(format!("eigensolver failed: {e:?}"))
    }
    if rcond(m_u) >= STANDARD_EIGEN_RCOND {
        let c = m_u.partial_piv_lu().solve(-s);
        let evd = c.eigen().map_err(fail)?;
        let values = evd.S().column_vector().iter().copied().collect();
        return Ok((values, evd.U().to_owned()));
    }
    let neg_s = -s;
    let gevd = neg_s.generalized_eigen(m_u).map_err(fail)?;
    let s_a = gevd.S_a().column_vector();
    let s_b = gevd.S_b().column_vector();
    let mut values = Vec::with_capacity(m_u.nrows());
    for i in 0..m_u.nrows() {
        if s_b[i].norm() == 0.0 {
            return Err(Error::DegenerateSpectrum(
                "an eigenvalue of the reduced pencil is infinite".into(),
            ));
        }
        values.push(s_a[i] / s_b[i]);
    }
    Ok((values, gevd.U().to_owned()))
}

fn lift(u: faer::ColRef<'_, c64>, recovery: MatRef<'_, f64>) -> Vec<c64> {
    let n_u = u.nrows();
    let n_phi = recovery.nrows();
    let mut x = Vec::with_capacity(n_u + n_phi);
    x.extend(u.iter().copied());
    for r in 0..n_phi {
        let mut acc = c64::new(0.0, 0.0);
        for c in 0..n_u {
            acc += u[c] * recovery[(r, c)];
        }
        x.push(acc);
    }
    x
}

fn renormalize(mut x: Vec<c64>) -> Vec<c64> {
    let n = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for v in &mut x {
            *v /= n;
        }
    }
    x
}

pub(crate) fn min_gaps(values: &[c64]) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(i, a)| {
            values
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .fold(f64::INFINITY, |m, (_, b)| m.min((a - b).norm()))
        })
        .collect()
}

/// A candidate (X̂, Ĵ) with Ĵ = diag(Ĵ₁, 0): Ĵ₁ carries the (finite)
/// eigenvalue blocks, the trailing zero block the infinite part.
#[derive(Debug, Clone)]
pub struct JordanPairCandidate {
    x: Mat<f64>,
    j1: Mat<f64>,
    n_infinite: usize,
}

impl JordanPairCandidate {
    pub fn new(x: Mat<f64>, j1: Mat<f64>, n_infinite: usize) -> Result<Self> {
        if j1.nrows() != j1.ncols() {
            return Err(Error::dims("J₁ must be square"));
        }
        if x.ncols() != j1.nrows() + n_infinite {
            return Err(Error::dims(format!(
                "X has {} columns, J has order {}",
                x.ncols(),
                j1.nrows() + n_infinite
            )));
        }
        Ok(Self { x, j1, n_infinite })
    }

    pub fn x(&self) -> MatRef<'_, f64> {
        self.x.as_ref()
    }

    pub fn j1(&self) -> MatRef<'_, f64> {
        self.j1.as_ref()
    }

    pub fn n_infinite(&self) -> usize {
        self.n_infinite
    }

    pub fn x_mut(&mut self) -> faer::MatMut<'_, f64> {
        self.x.as_mut()
    }

    /// Ĵ = diag(Ĵ₁, 0).
    pub fn j(&self) -> Mat<f64> {
        crate::linalg::block_diag(
            self.j1.as_ref(),
            Mat::<f64>::zeros(self.n_infinite, self.n_infinite).as_ref(),
        )
    }
}

/// Outcome of one checked condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Pass/fail per condition with the measured residuals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub checks: Vec<ConditionCheck>,
}

impl CheckReport {
    pub(crate) fn push(&mut self, name: &'static str, residual: f64, threshold: f64) {
        let passed = residual <= threshold;
        self.checks.push(ConditionCheck {
            name,
            residual,
            threshold,
            passed,
        });
    }

    pub(crate) fn push_bool(&mut self, name: &'static str, residual: f64, passed: bool) {
        self.checks.push(ConditionCheck {
            name,
            residual,
            threshold: f64::NAN,
            passed,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub const COND_FINITE: &str = "finite-eigen-relation";
pub const COND_INFINITE: &str = "infinite-kernel";
pub const COND_RANK: &str = "full-column-rank";
pub const COND_J1: &str = "j1-nonsingular";
pub const COND_BLOCK_FORM: &str = "block-triangular-form";

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Evaluates the finite-pair, infinite-pair, rank and block-form
/// conditions that characterize a Jordan pair of the pencil. Residuals are
/// relative: the finite relation is scaled by (‖M‖‖Ĵ₁‖ + ‖K‖)‖X̂‖ (or its
/// inverted analogue), the kernel relation by ‖M‖‖X̂‖.
pub fn check_jordan_pair(
    p: &StructuredPencil,
    c: &JordanPairCandidate,
    tol: f64,
) -> Result<CheckReport> {
    let n = p.n();
    let m = c.x.ncols();
    let q = c.j1.nrows();
    if c.x.nrows() != n {
        return Err(Error::dims(format!(
            "X has {} rows, pencil has order {n}",
            c.x.nrows()
        )));
    }
    if m > n {
        return Err(Error::dims(format!("X has {m} columns, more than n = {n}")));
    }
    let mut report = CheckReport::default();
    let norm_m = p.mass_norm();
    let norm_k = p.stiffness_norm();

    let rank = numerical_rank(c.x.as_ref(), tol);
    report.push_bool(COND_RANK, (m - rank.min(m)) as f64, rank == m);

    if q > 0 {
        let x_f = c.x.as_ref().submatrix(0, 0, n, q);
        let norm_xf = spectral_norm(x_f);
        let j_rc = rcond(c.j1.as_ref());
        report.push_bool(COND_J1, j_rc, j_rc > f64::EPSILON);
        let kx = p.k() * x_f;
        if c.n_infinite == 0 {
            let r = p.apply_mass(x_f) * c.j1.as_ref() + &kx;
            let den = (norm_m * spectral_norm(c.j1.as_ref()) + norm_k) * norm_xf;
            report.push(COND_FINITE, ratio(spectral_norm(r.as_ref()), den), tol);
        } else {
            match guarded_solve(
                c.j1.as_ref(),
                Mat::<f64>::identity(q, q).as_ref(),
                f64::EPSILON,
            ) {
                Ok(j1_inv) => {
                    let r = p.apply_mass(x_f) + &kx * &j1_inv;
                    let den = (norm_m + norm_k * spectral_norm(j1_inv.as_ref())) * norm_xf;
                    report.push(COND_FINITE, ratio(spectral_norm(r.as_ref()), den), tol);
                }
                Err(_) => report.push(COND_FINITE, f64::INFINITY, tol),
            }
        }
    }
    if c.n_infinite > 0 {
        let x_i = c.x.as_ref().submatrix(0, q, n, c.n_infinite);
        let r = p.apply_mass(x_i);
        let den = norm_m * spectral_norm(x_i);
        report.push(COND_INFINITE, ratio(spectral_norm(r.as_ref()), den), tol);
    }
    if m == n && q == p.n_u() {
        let upper_right = c.x.as_ref().submatrix(0, q, p.n_u(), p.n_phi());
        let r = ratio(spectral_norm(upper_right), spectral_norm(c.x.as_ref()));
        report.push(COND_BLOCK_FORM, r, tol);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::mat;

    fn diag3() -> StructuredPencil {
        let m_u = Mat::<f64>::identity(2, 2);
        let k = mat![[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        StructuredPencil::new(m_u, k, 2, 1).unwrap()
    }

    #[test]
    fn identity_blocks_are_valid() {
        let p = StructuredPencil::new(
            Mat::identity(2, 2),
            Mat::identity(3, 3),
            2,
            1,
        )
        .unwrap();
        assert_eq!(p.n(), 3);
    }

    #[test]
    fn zero_k_phi_is_singular_block() {
        let mut k = Mat::<f64>::identity(3, 3);
        k[(2, 2)] = 0.0;
        let err = StructuredPencil::new(Mat::identity(2, 2), k, 2, 1).unwrap_err();
        assert!(matches!(err, Error::SingularBlock { block: "K_phi", .. }));
    }

    #[test]
    fn singular_m_u_rejected() {
        let m_u = mat![[1.0, 1.0], [1.0, 1.0]];
        let err = StructuredPencil::new(m_u, Mat::identity(3, 3), 2, 1).unwrap_err();
        assert!(matches!(err, Error::SingularBlock { block: "M_u", .. }));
    }

    #[test]
    fn dimension_and_symmetry_errors() {
        let err = StructuredPencil::new(Mat::identity(2, 2), Mat::identity(4, 4), 2, 1).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        let mut k = Mat::<f64>::identity(3, 3);
        k[(0, 1)] = 0.5;
        let err = StructuredPencil::new(Mat::identity(2, 2), k, 2, 1).unwrap_err();
        assert!(matches!(err, Error::AsymmetricInput { matrix: "K", .. }));
        let mut k = Mat::<f64>::identity(3, 3);
        k[(0, 0)] = f64::NAN;
        let err = StructuredPencil::new(Mat::identity(2, 2), k, 2, 1).unwrap_err();
        assert!(matches!(err, Error::NonFinite("K")));
    }

    #[test]
    fn tiny_asymmetry_is_symmetrized() {
        let mut k = Mat::<f64>::identity(3, 3);
        k[(0, 1)] = 1e-13;
        let p = StructuredPencil::new(Mat::identity(2, 2), k, 2, 1).unwrap();
        assert_eq!(p.k()[(0, 1)], p.k()[(1, 0)]);
    }

    #[test]
    fn decoupled_schur_complement() {
        let p = diag3();
        let r = schur_reduce(&p).unwrap();
        assert_eq!(r.s, mat![[1.0, 0.0], [0.0, 2.0]]);
        assert_eq!(r.recovery, Mat::<f64>::zeros(1, 2));
    }

    #[test]
    fn hand_computed_schur_complement() {
        // K_u = 2I, K_uphi = [1; 0], K_phi = [1]
        let k = mat![[2.0, 0.0, 1.0], [0.0, 2.0, 0.0], [1.0, 0.0, 1.0]];
        let p = StructuredPencil::new(Mat::identity(2, 2), k, 2, 1).unwrap();
        let r = schur_reduce(&p).unwrap();
        assert_eq!(r.s, mat![[1.0, 0.0], [0.0, 2.0]]);
        assert_eq!(r.recovery, mat![[-1.0, 0.0]]);
    }

    #[test]
    fn diagonal_pencil_spectrum() {
        let p = diag3();
        let s = solve_spectrum(&p, &Tolerances::default()).unwrap();
        let ev = s.eigenvalues();
        assert_eq!(ev.len(), 2);
        assert!((ev[0] - c64::new(-2.0, 0.0)).norm() < 1e-14);
        assert!((ev[1] - c64::new(-1.0, 0.0)).norm() < 1e-14);
        assert_eq!(s.infinite_basis, mat![[0.0], [0.0], [1.0]]);
        // normalized: first significant entry real positive, unit norm
        for e in &s.finite {
            let first = e.vector.iter().find(|v| v.norm() > 1e-12).unwrap();
            assert!(first.re > 0.0 && first.im == 0.0);
        }
    }

    #[test]
    fn zero_eigenvalue_is_degenerate() {
        // K_u has a zero diagonal entry, decoupled: λ = 0
        let k = mat![[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        let p = StructuredPencil::new(Mat::identity(2, 2), k, 2, 1).unwrap();
        let err = solve_spectrum(&p, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum(_)));
    }

    #[test]
    fn repeated_eigenvalue_is_degenerate() {
        let k = mat![[3.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 1.0]];
        let p = StructuredPencil::new(Mat::identity(2, 2), k, 2, 1).unwrap();
        assert!(matches!(
            solve_spectrum(&p, &Tolerances::default()),
            Err(Error::DegenerateSpectrum(_))
        ));
    }

    #[test]
    fn kernel_basis_is_infinite_pair() {
        let p = diag3();
        let c = JordanPairCandidate::new(mat![[0.0], [0.0], [1.0]], Mat::zeros(0, 0), 1).unwrap();
        let r = check_jordan_pair(&p, &c, 1e-10).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.get(COND_INFINITE).unwrap().residual == 0.0);
    }

    #[test]
    fn perturbed_upper_right_block_fails_block_form() {
        let p = diag3();
        let s = solve_spectrum(&p, &Tolerances::default()).unwrap();
        let mut c = s.real_jordan_pair().unwrap();
        assert!(check_jordan_pair(&p, &c, 1e-10).unwrap().passed());
        c.x_mut()[(0, 2)] = 0.5;
        let r = check_jordan_pair(&p, &c, 1e-10).unwrap();
        assert!(!r.get(COND_BLOCK_FORM).unwrap().passed);
        assert!(!r.get(COND_INFINITE).unwrap().passed);
    }

    #[test]
    fn candidate_shape_errors() {
        assert!(JordanPairCandidate::new(Mat::zeros(3, 2), Mat::zeros(1, 1), 0).is_err());
        let c = JordanPairCandidate::new(Mat::zeros(4, 1), Mat::zeros(1, 1), 0).unwrap();
        assert!(matches!(
            check_jordan_pair(&diag3(), &c, 1e-10),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
