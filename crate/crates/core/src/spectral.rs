//! Real representations of conjugate-closed eigendata and selection of the
//! eigenpairs to be replaced.
//!
//! A conjugate pair (α ± iβ, x_R ± i x_I) with β > 0 becomes the 2×2 block
//! `[[α, β], [−β, α]]` with columns `[x_R, x_I]`, so that
//! `M X Λ + K X = 0` holds in real arithmetic. Pair blocks always come first.

use faer::{c64, Col, Mat, MatRef};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{block_diag, hstack};
use crate::pencil::{min_gaps, SpectrumResult};

/// One eigenvalue (or eigenvector) of the complex pencil.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: c64,
    pub vector: Col<c64>,
}

impl EigenPair {
    pub fn new(value: c64, vector: Col<c64>) -> Self {
        Self { value, vector }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            value: self.value.conj(),
            vector: Col::from_fn(self.vector.nrows(), |i| self.vector[i].conj()),
        }
    }
}

/// A diagonal block of a real eigenvalue matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigBlock {
    /// `[[alpha, beta], [-beta, alpha]]`, representing α ± iβ.
    Pair { alpha: f64, beta: f64 },
    Real(f64),
}

impl EigBlock {
    pub fn width(&self) -> usize {
        match self {
            EigBlock::Pair { .. } => 2,
            EigBlock::Real(_) => 1,
        }
    }

    /// The eigenvalue with nonnegative imaginary part.
    pub fn leading(&self) -> c64 {
        match *self {
            EigBlock::Pair { alpha, beta } => c64::new(alpha, beta),
            EigBlock::Real(v) => c64::new(v, 0.0),
        }
    }
}

/// Block-diagonal real eigenvalue matrix: s pair blocks, then scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBlocks {
    blocks: Vec<EigBlock>,
}

impl SpectralBlocks {
    /// Validates the layout: every pair block precedes every scalar, each
    /// β > 0, and the eigenvalues are nonzero and simple (to the default
    /// degeneracy tolerance).
    pub fn new(blocks: Vec<EigBlock>) -> Result<Self> {
        let mut seen_real = false;
        for b in &blocks {
            match *b {
                EigBlock::Pair { alpha, beta } => {
                    if seen_real {
                        return Err(Error::MalformedBlocks(
                            "2x2 pair blocks must precede the 1x1 real blocks".into(),
                        ));
                    }
                    if !(beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
                        return Err(Error::MalformedBlocks(format!(
                            "pair block needs finite alpha and beta > 0, got ({alpha}, {beta})"
                        )));
                    }
                }
                EigBlock::Real(v) => {
                    seen_real = true;
                    if !v.is_finite() {
                        return Err(Error::MalformedBlocks(format!("non-finite eigenvalue {v}")));
                    }
                    if v == 0.0 {
                        return Err(Error::ZeroEigenvalue(c64::new(0.0, 0.0)));
                    }
                }
            }
        }
        let out = Self { blocks };
        let values = out.eigenvalues();
        let rho = values.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        let cut = Tolerances::default().degenerate_rel * rho;
        if let Some((v, _)) = values.iter().zip(min_gaps(&values)).find(|(_, g)| *g <= cut) {
            return Err(Error::DuplicateEigenvalue(*v));
        }
        Ok(out)
    }

    /// Canonical real representation of a conjugate-closed list of
    /// eigenvalues: pairs by ascending (α, β), then reals ascending.
    pub fn from_complex(values: &[c64], tol: &Tolerances) -> Result<Self> {
        let (blocks, _) = pair_up(values, tol)?;
        let mut blocks: Vec<(EigBlock, usize)> = blocks;
        sort_blocks(&mut blocks);
        Self::new(blocks.into_iter().map(|(b, _)| b).collect())
    }

    /// Reads the block layout off a p×p matrix with `s` leading 2×2 blocks.
    pub fn from_matrix(lambda: MatRef<'_, f64>, s: usize) -> Result<Self> {
        let p = lambda.nrows();
        if lambda.ncols() != p {
            return Err(Error::MalformedBlocks("eigenvalue matrix must be square".into()));
        }
        if 2 * s > p {
            return Err(Error::MalformedBlocks(format!(
                "{s} pair blocks do not fit in a {p}x{p} matrix"
            )));
        }
        let mut blocks = Vec::with_capacity(p - s);
        let mut expected = Mat::<f64>::zeros(p, p);
        for j in 0..s {
            let k = 2 * j;
            let (a, b) = (lambda[(k, k)], lambda[(k, k + 1)]);
            blocks.push(EigBlock::Pair { alpha: a, beta: b });
            expected[(k, k)] = a;
            expected[(k + 1, k + 1)] = a;
            expected[(k, k + 1)] = b;
            expected[(k + 1, k)] = -b;
        }
        for k in 2 * s..p {
            blocks.push(EigBlock::Real(lambda[(k, k)]));
            expected[(k, k)] = lambda[(k, k)];
        }
        for j in 0..p {
            for i in 0..p {
                if lambda[(i, j)] != expected[(i, j)] {
                    return Err(Error::MalformedBlocks(format!(
                        "entry ({i}, {j}) = {} breaks the [[a, b], [-b, a]] block pattern",
                        lambda[(i, j)]
                    )));
                }
            }
        }
        Self::new(blocks)
    }

    pub fn blocks(&self) -> &[EigBlock] {
        &self.blocks
    }

    /// Order p of the eigenvalue matrix.
    pub fn p(&self) -> usize {
        self.blocks.iter().map(EigBlock::width).sum()
    }

    /// Number of conjugate pairs.
    pub fn s(&self) -> usize {
        self.blocks
            .iter()
            .filter(|b| matches!(b, EigBlock::Pair { .. }))
            .count()
    }

    /// The block-diagonal matrix Λ.
    pub fn matrix(&self) -> Mat<f64> {
        self.assemble(|b| match *b {
            EigBlock::Pair { alpha, beta } => [alpha, beta, -beta, alpha],
            EigBlock::Real(v) => [v, 0.0, 0.0, 0.0],
        })
    }

    /// Λ⁻¹, inverted block by block.
    pub fn inverse_matrix(&self) -> Mat<f64> {
        self.assemble(|b| match *b {
            EigBlock::Pair { alpha, beta } => {
                let d = alpha * alpha + beta * beta;
                [alpha / d, -beta / d, beta / d, alpha / d]
            }
            EigBlock::Real(v) => [1.0 / v, 0.0, 0.0, 0.0],
        })
    }

    fn assemble(&self, f: impl Fn(&EigBlock) -> [f64; 4]) -> Mat<f64> {
        let p = self.p();
        let mut m = Mat::zeros(p, p);
        let mut k = 0;
        for b in &self.blocks {
            let [a, bb, c, d] = f(b);
            match b {
                EigBlock::Pair { .. } => {
                    m[(k, k)] = a;
                    m[(k, k + 1)] = bb;
                    m[(k + 1, k)] = c;
                    m[(k + 1, k + 1)] = d;
                    k += 2;
                }
                EigBlock::Real(_) => {
                    m[(k, k)] = a;
                    k += 1;
                }
            }
        }
        m
    }

    /// All p complex eigenvalues, each pair as (α + iβ, α − iβ).
    pub fn eigenvalues(&self) -> Vec<c64> {
        let mut out = Vec::with_capacity(self.p());
        for b in &self.blocks {
            match *b {
                EigBlock::Pair { alpha, beta } => {
                    out.push(c64::new(alpha, beta));
                    out.push(c64::new(alpha, -beta));
                }
                EigBlock::Real(v) => out.push(c64::new(v, 0.0)),
            }
        }
        out
    }
}

/// Real eigenvalue blocks Λ together with matching real eigenvectors X.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSpectralData {
    values: SpectralBlocks,
    x: Mat<f64>,
}

impl RealSpectralData {
    pub fn new(values: SpectralBlocks, x: Mat<f64>) -> Result<Self> {
        if x.ncols() != values.p() {
            return Err(Error::dims(format!(
                "X has {} columns but Λ has order {}",
                x.ncols(),
                values.p()
            )));
        }
        Ok(Self { values, x })
    }

    /// From an explicit Λ with `s` leading pair blocks.
    pub fn from_matrices(lambda: MatRef<'_, f64>, x: Mat<f64>, s: usize) -> Result<Self> {
        Self::new(SpectralBlocks::from_matrix(lambda, s)?, x)
    }

    pub fn values(&self) -> &SpectralBlocks {
        &self.values
    }

    pub fn x(&self) -> MatRef<'_, f64> {
        self.x.as_ref()
    }

    pub fn lambda(&self) -> Mat<f64> {
        self.values.matrix()
    }

    pub fn p(&self) -> usize {
        self.values.p()
    }

    pub fn s(&self) -> usize {
        self.values.s()
    }

    /// Leading `n_u` rows of X.
    pub fn x_u(&self, n_u: usize) -> MatRef<'_, f64> {
        self.x.as_ref().submatrix(0, 0, n_u, self.x.ncols())
    }
}

type Paired = (Vec<(EigBlock, usize)>, Vec<usize>);

/// Pairs every eigenvalue with positive imaginary part to its conjugate.
/// Returns canonical blocks with the index of the leading member.
fn pair_up(values: &[c64], tol: &Tolerances) -> Result<Paired> {
    let rho = values.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    for v in values {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::MalformedBlocks(format!("non-finite eigenvalue {v}")));
        }
        if v.norm() == 0.0 || v.norm() <= tol.degenerate_rel * rho {
            return Err(Error::ZeroEigenvalue(*v));
        }
    }
    let gaps = min_gaps(values);
    for (v, g) in values.iter().zip(&gaps) {
        if *g <= tol.degenerate_rel * rho {
            return Err(Error::DuplicateEigenvalue(*v));
        }
    }
    let is_real = |v: &c64| v.im.abs() <= 1e-14 * v.norm();
    let mut partner = vec![usize::MAX; values.len()];
    let mut blocks = Vec::new();
    for (i, v) in values.iter().enumerate() {
        if is_real(v) {
            blocks.push((EigBlock::Real(v.re), i));
            continue;
        }
        if v.im < 0.0 {
            continue;
        }
        let target = v.conj();
        let found = values
            .iter()
            .enumerate()
            .filter(|(j, w)| *j != i && w.im < 0.0 && !is_real(w) && partner[*j] == usize::MAX)
            .min_by(|a, b| (a.1 - target).norm().partial_cmp(&(b.1 - target).norm()).unwrap());
        match found {
            Some((j, w)) if (w - target).norm() <= tol.matching_rel * v.norm() => {
                partner[j] = i;
                partner[i] = j;
                blocks.push((
                    EigBlock::Pair {
                        alpha: v.re,
                        beta: v.im,
                    },
                    i,
                ));
            }
            _ => {
                return Err(Error::NotConjugateClosed(format!(
                    "{v} has no conjugate partner"
                )))
            }
        }
    }
    for (i, v) in values.iter().enumerate() {
        if !is_real(v) && v.im < 0.0 && partner[i] == usize::MAX {
            return Err(Error::NotConjugateClosed(format!("{v} has no conjugate partner")));
        }
    }
    Ok((blocks, partner))
}

fn sort_blocks(blocks: &mut [(EigBlock, usize)]) {
    let key = |b: &EigBlock| match *b {
        EigBlock::Pair { alpha, beta } => (0, alpha, beta),
        EigBlock::Real(v) => (1, v, 0.0),
    };
    blocks.sort_by(|a, b| key(&a.0).partial_cmp(&key(&b.0)).unwrap());
}

/// Builds (Λ, X) from conjugate-closed complex eigenpairs.
pub fn to_real_representation(pairs: &[EigenPair], tol: &Tolerances) -> Result<RealSpectralData> {
    if pairs.is_empty() {
        return Err(Error::MalformedBlocks("no eigenpairs given".into()));
    }
    let n = pairs[0].vector.nrows();
    if pairs.iter().any(|e| e.vector.nrows() != n) {
        return Err(Error::dims("eigenvectors have different lengths"));
    }
    let values: Vec<c64> = pairs.iter().map(|e| e.value).collect();
    let (mut blocks, partner) = pair_up(&values, tol)?;
    for (b, i) in &blocks {
        if let EigBlock::Pair { .. } = b {
            let x = &pairs[*i].vector;
            let y = &pairs[partner[*i]].vector;
            let scale = x.norm_l2();
            let mismatch = (0..n).map(|k| (y[k] - x[k].conj()).norm_sqr()).sum::<f64>().sqrt();
            if mismatch > tol.matching_rel * scale {
                return Err(Error::NotConjugateClosed(format!(
                    "eigenvectors of {} and its conjugate are not conjugate (mismatch {mismatch:.3e})",
                    pairs[*i].value
                )));
            }
        }
    }
    sort_blocks(&mut blocks);
    let p: usize = blocks.iter().map(|(b, _)| b.width()).sum();
    let mut x = Mat::zeros(n, p);
    let mut col = 0;
    for (b, i) in &blocks {
        let v = &pairs[*i].vector;
        match b {
            EigBlock::Pair { .. } => {
                for k in 0..n {
                    x[(k, col)] = v[k].re;
                    x[(k, col + 1)] = v[k].im;
                }
                col += 2;
            }
            EigBlock::Real(_) => {
                // A real eigenvector may carry an arbitrary complex phase.
                let big = (0..n).map(|k| v[k]).fold(c64::new(0.0, 0.0), |m, z| {
                    if z.norm() > m.norm() {
                        z
                    } else {
                        m
                    }
                });
                let phase = if big.norm() > 0.0 {
                    big.conj() / big.norm()
                } else {
                    c64::new(1.0, 0.0)
                };
                for k in 0..n {
                    x[(k, col)] = (v[k] * phase).re;
                }
                col += 1;
            }
        }
    }
    RealSpectralData::new(SpectralBlocks::new(blocks.into_iter().map(|(b, _)| b).collect())?, x)
}

/// Inverse of [`to_real_representation`]: the conjugate-closed complex list,
/// pairs as (α + iβ, x_R + i x_I) followed by their conjugates.
pub fn from_real_representation(d: &RealSpectralData) -> Vec<EigenPair> {
    let n = d.x.nrows();
    let mut out = Vec::with_capacity(d.p());
    let mut col = 0;
    for b in d.values.blocks() {
        match *b {
            EigBlock::Pair { alpha, beta } => {
                let v = Col::from_fn(n, |k| c64::new(d.x[(k, col)], d.x[(k, col + 1)]));
                let e = EigenPair::new(c64::new(alpha, beta), v);
                out.push(e.conjugate());
                out.insert(out.len() - 1, e);
                col += 2;
            }
            EigBlock::Real(v) => {
                let x = Col::from_fn(n, |k| c64::new(d.x[(k, col)], 0.0));
                out.push(EigenPair::new(c64::new(v, 0.0), x));
                col += 1;
            }
        }
    }
    out
}

/// Indices into [`SpectrumResult::finite`] of the replaced and retained pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub selected: Vec<usize>,
    pub retained: Vec<usize>,
}

/// Picks the finite eigenpairs matching `targets` and returns their real
/// representation (Λ₁, X₁).
pub fn select_eigendata(
    s: &SpectrumResult,
    targets: &[c64],
    tol: &Tolerances,
) -> Result<(RealSpectralData, Selection)> {
    if targets.is_empty() {
        return Err(Error::MalformedBlocks("empty selection".into()));
    }
    let values = s.eigenvalues();
    let mut taken = vec![false; values.len()];
    let mut selected = Vec::with_capacity(targets.len());
    for &t in targets {
        let radius = tol.matching_rel * t.norm().max(f64::MIN_POSITIVE);
        let mut hits: Vec<usize> = (0..values.len())
            .filter(|&i| (values[i] - t).norm() <= radius)
            .collect();
        hits.sort_by(|&a, &b| {
            (values[a] - t)
                .norm()
                .partial_cmp(&(values[b] - t).norm())
                .unwrap()
        });
        match hits.len() {
            0 => return Err(Error::NoMatch(t)),
            1 => {}
            _ => {
                return Err(Error::Overlap(format!(
                    "requested eigenvalue {t} matches both {} and {}",
                    values[hits[0]], values[hits[1]]
                )))
            }
        }
        let i = hits[0];
        if taken[i] {
            return Err(Error::Overlap(format!(
                "eigenvalue {} requested more than once",
                values[i]
            )));
        }
        taken[i] = true;
        selected.push(i);
    }
    // closure: every selected complex value needs its conjugate selected
    for &i in &selected {
        let v = values[i];
        if v.im != 0.0 {
            let has = selected
                .iter()
                .any(|&j| j != i && (values[j] - v.conj()).norm() <= 1e-12 * v.norm());
            if !has {
                return Err(Error::NotConjugateClosed(format!(
                    "selection contains {v} but not its conjugate"
                )));
            }
        }
    }
    let pairs: Vec<EigenPair> = selected.iter().map(|&i| s.finite[i].clone()).collect();
    let data = to_real_representation(&pairs, tol)?;
    let mut sel_sorted = selected.clone();
    sel_sorted.sort_unstable();
    let retained = (0..values.len()).filter(|i| !taken[*i]).collect();
    Ok((
        data,
        Selection {
            selected: sel_sorted,
            retained,
        },
    ))
}

/// Retained eigendata (X₂, Λ₃) in real form, including the infinite basis.
#[derive(Debug, Clone)]
pub struct RetainedData {
    /// Real representation of the retained finite pairs (absent when every
    /// finite eigenvalue is replaced).
    pub finite: Option<RealSpectralData>,
    pub infinite_basis: Mat<f64>,
}

impl RetainedData {
    /// X₂ = [X₃, X_∞].
    pub fn x2(&self) -> Mat<f64> {
        match &self.finite {
            Some(f) => hstack(f.x(), self.infinite_basis.as_ref()),
            None => self.infinite_basis.clone(),
        }
    }

    /// Λ₂′ = diag(Λ₃⁻¹, 0).
    pub fn lambda2_prime(&self) -> Mat<f64> {
        let k = self.infinite_basis.ncols();
        let zero = Mat::<f64>::zeros(k, k);
        match &self.finite {
            Some(f) => block_diag(f.values().inverse_matrix().as_ref(), zero.as_ref()),
            None => zero,
        }
    }

    pub fn eigenvalues(&self) -> Vec<c64> {
        self.finite
            .as_ref()
            .map(|f| f.values().eigenvalues())
            .unwrap_or_default()
    }
}

pub fn retained_eigendata(
    s: &SpectrumResult,
    sel: &Selection,
    tol: &Tolerances,
) -> Result<RetainedData> {
    let pairs: Vec<EigenPair> = sel.retained.iter().map(|&i| s.finite[i].clone()).collect();
    let finite = if pairs.is_empty() {
        None
    } else {
        Some(to_real_representation(&pairs, tol)?)
    };
    Ok(RetainedData {
        finite,
        infinite_basis: s.infinite_basis.clone(),
    })
}

/// Rejects target eigenvalues that coincide (to the matching tolerance)
/// with an eigenvalue that is kept.
pub fn check_target_disjointness(
    targets: &SpectralBlocks,
    retained: &[c64],
    tol: &Tolerances,
) -> Result<()> {
    for t in targets.eigenvalues() {
        for r in retained {
            if (t - r).norm() <= tol.matching_rel * t.norm().max(r.norm()) {
                return Err(Error::Overlap(format!(
                    "target eigenvalue {t} coincides with retained eigenvalue {r}"
                )));
            }
        }
    }
    Ok(())
}
