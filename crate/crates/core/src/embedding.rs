//! The parametric no-spillover update and the spectral-decomposition
//! verifier/reconstructor.
//!
//! With (Λ₁, X₁) the replaced eigendata, Γ₁ = X₁ᵤᵀ M_u X₁ᵤ and a parameter
//! pair (Θ, Γ̃₁), the updated coefficients are
//!
//! ```text
//! M̃_u⁻¹ = M_u⁻¹ + X₁ᵤ (Θ Γ̃₁⁻¹ Θᵀ − Γ₁⁻¹) X₁ᵤᵀ
//! K̃⁻¹   = K⁻¹   + X₁  ((Γ₁Λ₁)⁻¹ − Θ (Γ̃₁Λ̃₁)⁻¹ Θᵀ) X₁ᵀ
//! ```
//!
//! and X̃₁ = X₁Θ are eigenvectors for Λ̃₁ while every other eigenpair is kept.

use faer::{Mat, MatRef};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, guarded_inverse, guarded_solve, numerical_rank, rcond, relative_asymmetry,
    spectral_norm, symmetrize, symmetrize_logged,
};
use crate::pencil::{CheckReport, StructuredPencil};
use crate::spectral::{RealSpectralData, SpectralBlocks};

/// How a parameter set was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamMode {
    /// Θ = I, Γ̃₁ = Γ₁.
    ChoiceA,
    /// Θ fixed, Γ̃₁ optimized.
    ChoiceB,
    Custom,
}

impl ParamMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ParamMode::ChoiceA => "choice_a",
            ParamMode::ChoiceB => "choice_b",
            ParamMode::Custom => "custom",
        }
    }
}

/// Θ and Γ̃₁. Γ̃₁ consists of `s_tilde` blocks `[[a, b], [b, −a]]` followed by
/// scalars, matching the layout of the target eigenvalue matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    theta: Mat<f64>,
    gamma_tilde: Mat<f64>,
    s_tilde: usize,
    pub mode: ParamMode,
}

impl ParameterSet {
    pub fn new(
        theta: Mat<f64>,
        gamma_tilde: Mat<f64>,
        s_tilde: usize,
        mode: ParamMode,
        tol: &Tolerances,
    ) -> Result<Self> {
        let p = theta.nrows();
        if theta.ncols() != p || gamma_tilde.nrows() != p || gamma_tilde.ncols() != p {
            return Err(Error::dims(format!(
                "Θ is {}x{}, Γ̃₁ is {}x{}; both must be p×p",
                theta.nrows(),
                theta.ncols(),
                gamma_tilde.nrows(),
                gamma_tilde.ncols()
            )));
        }
        if 2 * s_tilde > p {
            return Err(Error::MalformedBlocks(format!(
                "{s_tilde} pair blocks do not fit in order {p}"
            )));
        }
        if !crate::linalg::is_finite(theta.as_ref()) {
            return Err(Error::NonFinite("Θ"));
        }
        if !crate::linalg::is_finite(gamma_tilde.as_ref()) {
            return Err(Error::NonFinite("Γ̃₁"));
        }
        let dev = block_form_deviation(gamma_tilde.as_ref(), s_tilde);
        if dev > tol.structure {
            return Err(Error::MalformedBlocks(format!(
                "Γ̃₁ deviates from the [[a, b], [b, -a]] / scalar pattern by {dev:.3e}"
            )));
        }
        let gamma_tilde = project_block_form(gamma_tilde.as_ref(), s_tilde);
        for (what, m) in [("Θ", &theta), ("Γ̃₁", &gamma_tilde)] {
            let rc = rcond(m.as_ref());
            if !(rc >= tol.ill_defined_rcond) {
                return Err(Error::Singular {
                    what,
                    rcond: rc,
                    threshold: tol.ill_defined_rcond,
                });
            }
        }
        Ok(Self {
            theta,
            gamma_tilde,
            s_tilde,
            mode,
        })
    }

    /// Builds Γ̃₁ from its p free entries (a₁, b₁, …, a_s̃, b_s̃, c₁, …).
    pub fn from_free_params(
        theta: Mat<f64>,
        params: &[f64],
        s_tilde: usize,
        mode: ParamMode,
        tol: &Tolerances,
    ) -> Result<Self> {
        let p = params.len();
        if 2 * s_tilde > p {
            return Err(Error::MalformedBlocks(format!(
                "{s_tilde} pair blocks do not fit in order {p}"
            )));
        }
        Self::new(theta, gamma_from_free(params, s_tilde), s_tilde, mode, tol)
    }

    pub fn theta(&self) -> MatRef<'_, f64> {
        self.theta.as_ref()
    }

    pub fn gamma_tilde(&self) -> MatRef<'_, f64> {
        self.gamma_tilde.as_ref()
    }

    pub fn p(&self) -> usize {
        self.theta.nrows()
    }

    pub fn s_tilde(&self) -> usize {
        self.s_tilde
    }

    pub fn free_params(&self) -> Vec<f64> {
        let g = &self.gamma_tilde;
        let mut out = Vec::with_capacity(self.p());
        for j in 0..self.s_tilde {
            out.push(g[(2 * j, 2 * j)]);
            out.push(g[(2 * j, 2 * j + 1)]);
        }
        for k in 2 * self.s_tilde..self.p() {
            out.push(g[(k, k)]);
        }
        out
    }

    /// ‖Γ̃₁Λ̃₁⁻¹ − Λ̃₁⁻ᵀΓ̃₁‖ relative to ‖Γ̃₁‖‖Λ̃₁⁻¹‖.
    pub fn commutation_residual(&self, target: &SpectralBlocks) -> f64 {
        let li = target.inverse_matrix();
        let g = &self.gamma_tilde;
        let r = g * &li - li.transpose() * g;
        let den = spectral_norm(g.as_ref()) * spectral_norm(li.as_ref());
        spectral_norm(r.as_ref()) / den
    }
}

pub(crate) fn gamma_from_free(params: &[f64], s_tilde: usize) -> Mat<f64> {
    let p = params.len();
    let mut g = Mat::zeros(p, p);
    for j in 0..s_tilde {
        let (a, b) = (params[2 * j], params[2 * j + 1]);
        let k = 2 * j;
        g[(k, k)] = a;
        g[(k, k + 1)] = b;
        g[(k + 1, k)] = b;
        g[(k + 1, k + 1)] = -a;
    }
    for k in 2 * s_tilde..p {
        g[(k, k)] = params[k];
    }
    g
}

/// Nearest matrix in the Γ-block pattern (entries outside the pattern
/// dropped, each block averaged onto [[a, b], [b, −a]]).
fn project_block_form(g: MatRef<'_, f64>, s: usize) -> Mat<f64> {
    let p = g.nrows();
    let mut params = vec![0.0; p];
    for j in 0..s {
        let k = 2 * j;
        params[k] = 0.5 * (g[(k, k)] - g[(k + 1, k + 1)]);
        params[k + 1] = 0.5 * (g[(k, k + 1)] + g[(k + 1, k)]);
    }
    for k in 2 * s..p {
        params[k] = g[(k, k)];
    }
    gamma_from_free(&params, s)
}

/// Relative distance of `g` from the Γ-block pattern with `s` pair blocks.
pub fn block_form_deviation(g: MatRef<'_, f64>, s: usize) -> f64 {
    let proj = project_block_form(g, s);
    let scale = spectral_norm(g);
    let d = spectral_norm((g - &proj).as_ref());
    if scale == 0.0 {
        d
    } else {
        d / scale
    }
}

/// Γ₁ = X₁ᵤᵀ M_u X₁ᵤ and its measured deviation from the block pattern.
#[derive(Debug, Clone)]
pub struct Gamma1 {
    pub matrix: Mat<f64>,
    pub structure_residual: f64,
}

pub fn compute_gamma1(
    p: &StructuredPencil,
    x1: MatRef<'_, f64>,
    s: usize,
    tol: &Tolerances,
) -> Result<Gamma1> {
    if x1.nrows() != p.n() {
        return Err(Error::dims(format!(
            "X₁ has {} rows, pencil has order {}",
            x1.nrows(),
            p.n()
        )));
    }
    let q = x1.ncols();
    if 2 * s > q {
        return Err(Error::MalformedBlocks(format!("{s} pair blocks do not fit in order {q}")));
    }
    let x1u = x1.submatrix(0, 0, p.n_u(), q);
    let rank = numerical_rank(x1u, tol.rank_rel);
    if rank < q {
        return Err(Error::RankDeficient {
            what: "X₁ᵤ",
            rank,
            expected: q,
        });
    }
    let g = x1u.transpose() * p.m_u() * x1u;
    let g = symmetrize_logged(g.as_ref(), "Γ₁");
    let rc = rcond(g.as_ref());
    if !(rc >= tol.ill_defined_rcond) {
        return Err(Error::Singular {
            what: "Γ₁",
            rcond: rc,
            threshold: tol.ill_defined_rcond,
        });
    }
    let structure_residual = block_form_deviation(g.as_ref(), s);
    if structure_residual > tol.structure {
        log::warn!(
            "Γ₁ deviates from the expected block pattern by {structure_residual:.3e}; \
             eigendata may be inaccurate"
        );
    }
    Ok(Gamma1 {
        matrix: g,
        structure_residual,
    })
}

/// Starting parameters for the update.
#[derive(Debug, Clone)]
pub struct GammaSeed {
    pub params: ParameterSet,
    /// Whether Θ = I, Γ̃₁ = Γ₁ is admissible (only when the pair count is
    /// unchanged).
    pub choice_a_available: bool,
}

/// Θ = I, Γ̃₁ = Γ₁ when s̃ = s; otherwise an identity-like seed in the target
/// pattern (a = 1, b = 0, scalars carrying the sign of Γ₁'s diagonal where it
/// is also a scalar slot, +1 elsewhere).
pub fn default_gamma_tilde(gamma1: &Gamma1, s: usize, s_tilde: usize) -> Result<GammaSeed> {
    let g = &gamma1.matrix;
    let p = g.nrows();
    let theta = Mat::<f64>::identity(p, p);
    let tol = Tolerances::default();
    if s_tilde == s {
        let params = ParameterSet {
            theta,
            gamma_tilde: project_block_form(g.as_ref(), s),
            s_tilde,
            mode: ParamMode::ChoiceA,
        };
        return Ok(GammaSeed {
            params,
            choice_a_available: true,
        });
    }
    let mut free = vec![0.0; p];
    for j in 0..s_tilde {
        free[2 * j] = 1.0;
    }
    for (k, v) in free.iter_mut().enumerate().skip(2 * s_tilde) {
        *v = if k >= 2 * s && g[(k, k)] < 0.0 { -1.0 } else { 1.0 };
    }
    Ok(GammaSeed {
        params: ParameterSet::from_free_params(theta, &free, s_tilde, ParamMode::Custom, &tol)?,
        choice_a_available: false,
    })
}

/// Update formula used to form (M̃_u, K̃).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Smw,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Smw => "smw",
        }
    }
}

/// Requested method; `Auto` picks the low-rank form when p ≤ n_u/4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    #[default]
    Auto,
    Direct,
    Smw,
}

impl MethodChoice {
    pub fn resolve(self, p: usize, n_u: usize) -> Method {
        match self {
            MethodChoice::Direct => Method::Direct,
            MethodChoice::Smw => Method::Smw,
            MethodChoice::Auto => {
                if 4 * p <= n_u {
                    Method::Smw
                } else {
                    Method::Direct
                }
            }
        }
    }
}

impl std::str::FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "direct" => Ok(Self::Direct),
            "smw" => Ok(Self::Smw),
            other => Err(Error::InvalidConfig(format!(
                "unknown method '{other}' (expected direct, smw or auto)"
            ))),
        }
    }
}

/// The updated coefficient matrices.
#[derive(Debug, Clone)]
pub struct UpdatedSystem {
    pub m_u: Mat<f64>,
    pub k: Mat<f64>,
    pub params: ParameterSet,
    pub method: Method,
    /// X̃₁ = X₁Θ.
    pub x1_tilde: Mat<f64>,
    pub target: SpectralBlocks,
}

impl UpdatedSystem {
    pub fn n_u(&self) -> usize {
        self.m_u.nrows()
    }

    /// The updated pencil, without re-validation.
    pub fn pencil(&self) -> StructuredPencil {
        StructuredPencil::from_parts_unchecked(self.m_u.clone(), self.k.clone(), self.m_u.nrows())
    }
}

/// The p×p middle factors D_M, D_K of the two rank-p corrections.
pub(crate) struct MiddleFactors {
    pub d_m: Mat<f64>,
    pub d_k: Mat<f64>,
}

fn ill(what: &'static str, tol: &Tolerances) -> impl Fn(f64) -> Error {
    let threshold = tol.ill_defined_rcond;
    move |rcond| Error::IllDefined {
        what,
        rcond,
        threshold,
    }
}

fn check_inputs(
    p: &StructuredPencil,
    old: &RealSpectralData,
    target: &SpectralBlocks,
    params: &ParameterSet,
) -> Result<()> {
    let q = old.p();
    if old.x().nrows() != p.n() {
        return Err(Error::dims(format!(
            "X₁ has {} rows, pencil has order {}",
            old.x().nrows(),
            p.n()
        )));
    }
    if target.p() != q || params.p() != q {
        return Err(Error::dims(format!(
            "replaced set has {q} eigenvalues, target {} and parameters {}",
            target.p(),
            params.p()
        )));
    }
    if params.s_tilde() != target.s() {
        return Err(Error::MalformedBlocks(format!(
            "Γ̃₁ has {} pair blocks but the target has {} conjugate pairs",
            params.s_tilde(),
            target.s()
        )));
    }
    Ok(())
}

pub(crate) fn middle_factors(
    gamma1: MatRef<'_, f64>,
    lambda1: MatRef<'_, f64>,
    target: &SpectralBlocks,
    params: &ParameterSet,
    tol: &Tolerances,
) -> Result<MiddleFactors> {
    let th = params.theta();
    let gt = params.gamma_tilde();
    let g1_inv = guarded_inverse(gamma1, tol.ill_defined_rcond).map_err(ill("Γ₁", tol))?;
    let gt_inv = guarded_inverse(gt, tol.ill_defined_rcond).map_err(ill("Γ̃₁", tol))?;
    let d_m = symmetrize((th * &gt_inv * th.transpose() - &g1_inv).as_ref());

    let gl = symmetrize((gamma1 * lambda1).as_ref());
    let gl_inv = guarded_inverse(gl.as_ref(), tol.ill_defined_rcond).map_err(ill("Γ₁Λ₁", tol))?;
    let gtl = symmetrize((gt * target.matrix()).as_ref());
    let gtl_inv =
        guarded_inverse(gtl.as_ref(), tol.ill_defined_rcond).map_err(ill("Γ̃₁Λ̃₁", tol))?;
    let d_k = symmetrize((&gl_inv - th * &gtl_inv * th.transpose()).as_ref());
    Ok(MiddleFactors { d_m, d_k })
}

/// Low-rank factors of the two corrections: M_u − M̃_u = A_m B_mᵀ and
/// K − K̃ = A_k B_kᵀ.
pub(crate) struct LowRankDelta {
    pub a_m: Mat<f64>,
    pub b_m: Mat<f64>,
    pub a_k: Mat<f64>,
    pub b_k: Mat<f64>,
}

pub(crate) fn low_rank_delta(
    p: &StructuredPencil,
    x1: MatRef<'_, f64>,
    gamma1: MatRef<'_, f64>,
    mf: &MiddleFactors,
    tol: &Tolerances,
) -> Result<LowRankDelta> {
    let q = x1.ncols();
    let id = Mat::<f64>::identity(q, q);
    let x1u = x1.submatrix(0, 0, p.n_u(), q);

    // M̃_u = M_u − (M_u X₁ᵤ D_M)(I + Γ₁ D_M)⁻¹ (X₁ᵤᵀ M_u)
    let mx = p.m_u() * x1u;
    let cap_m = &id + gamma1 * &mf.d_m;
    // (D_M C⁻¹)ᵀ = C⁻ᵀ D_M
    let t_m = guarded_solve(cap_m.transpose(), mf.d_m.as_ref(), tol.ill_defined_rcond)
        .map_err(ill("I + Γ₁D_M", tol))?;
    let a_m = &mx * t_m.transpose();

    let kx = p.k() * x1;
    let cap_k = &id + x1.transpose() * &kx * &mf.d_k;
    let t_k = guarded_solve(cap_k.transpose(), mf.d_k.as_ref(), tol.ill_defined_rcond)
        .map_err(ill("I + X₁ᵀKX₁D_K", tol))?;
    let a_k = &kx * t_k.transpose();
    Ok(LowRankDelta {
        a_m,
        b_m: mx,
        a_k,
        b_k: kx,
    })
}

struct Prepared {
    gamma1: Mat<f64>,
    mf: MiddleFactors,
}

fn prepare(
    p: &StructuredPencil,
    old: &RealSpectralData,
    target: &SpectralBlocks,
    params: &ParameterSet,
    tol: &Tolerances,
) -> Result<Prepared> {
    check_inputs(p, old, target, params)?;
    let g1 = compute_gamma1(p, old.x(), old.s(), tol)?;
    let commute = params.commutation_residual(target);
    if commute > 1e-12 {
        return Err(Error::MalformedBlocks(format!(
            "Γ̃₁ does not commute with Λ̃₁⁻¹ as required (residual {commute:.3e})"
        )));
    }
    let mf = middle_factors(g1.matrix.as_ref(), old.lambda().as_ref(), target, params, tol)?;
    Ok(Prepared {
        gamma1: g1.matrix,
        mf,
    })
}

fn finish(
    m_u: Mat<f64>,
    k: Mat<f64>,
    old: &RealSpectralData,
    target: &SpectralBlocks,
    params: &ParameterSet,
    method: Method,
) -> Result<UpdatedSystem> {
    if !crate::linalg::is_finite(m_u.as_ref()) || !crate::linalg::is_finite(k.as_ref()) {
        return Err(Error::IllDefined {
            what: "updated coefficients",
            rcond: 0.0,
            threshold: 0.0,
        });
    }
    let x1_tilde = old.x() * params.theta();
    Ok(UpdatedSystem {
        m_u: symmetrize_logged(m_u.as_ref(), "M̃_u"),
        k: symmetrize_logged(k.as_ref(), "K̃"),
        params: params.clone(),
        method,
        x1_tilde,
        target: target.clone(),
    })
}

fn warn_k_condition(p: &StructuredPencil) -> f64 {
    let rc = rcond(p.k());
    if rc < 1e-12 {
        log::warn!("K is poorly conditioned (condition estimate {:.3e})", 1.0 / rc);
    }
    rc
}

/// Forms M̃_u and K̃ by inverting the corrected inverses (n×n inversions).
pub fn embed_direct(
    p: &StructuredPencil,
    old: &RealSpectralData,
    target: &SpectralBlocks,
    params: &ParameterSet,
    tol: &Tolerances,
) -> Result<UpdatedSystem> {
    let prep = prepare(p, old, target, params, tol)?;
    let x1 = old.x();
    let x1u = old.x_u(p.n_u());
    warn_k_condition(p);

    let m_inv = guarded_inverse(p.m_u(), tol.ill_defined_rcond).map_err(ill("M_u", tol))?;
    let m_inv_new = symmetrize((&m_inv + x1u * &prep.mf.d_m * x1u.transpose()).as_ref());
    let m_u = guarded_inverse(m_inv_new.as_ref(), tol.ill_defined_rcond).map_err(ill("M̃_u⁻¹", tol))?;

    let k_inv = guarded_inverse(p.k(), tol.ill_defined_rcond).map_err(ill("K", tol))?;
    let k_inv_new = symmetrize((&k_inv + x1 * &prep.mf.d_k * x1.transpose()).as_ref());
    let k = guarded_inverse(k_inv_new.as_ref(), tol.ill_defined_rcond).map_err(ill("K̃⁻¹", tol))?;

    finish(m_u, k, old, target, params, Method::Direct)
}

/// Forms M̃_u and K̃ as rank-p corrections of M_u and K; only p×p systems are
/// solved.
pub fn embed_smw(
    p: &StructuredPencil,
    old: &RealSpectralData,
    target: &SpectralBlocks,
    params: &ParameterSet,
    tol: &Tolerances,
) -> Result<UpdatedSystem> {
    let prep = prepare(p, old, target, params, tol)?;
    let d = low_rank_delta(p, old.x(), prep.gamma1.as_ref(), &prep.mf, tol)?;
    let m_u = p.m_u() - &d.a_m * d.b_m.transpose();
    let k = p.k() - &d.a_k * d.b_k.transpose();
    finish(m_u, k, old, target, params, Method::Smw)
}

pub fn embed(
    p: &StructuredPencil,
    old: &RealSpectralData,
    target: &SpectralBlocks,
    params: &ParameterSet,
    method: MethodChoice,
    tol: &Tolerances,
) -> Result<UpdatedSystem> {
    match method.resolve(old.p(), p.n_u()) {
        Method::Direct => embed_direct(p, old, target, params, tol),
        Method::Smw => embed_smw(p, old, target, params, tol),
    }
}

/// Rec.MK-style distances ‖M_u − M̃_u‖₂ and ‖K − K̃‖₂ computed from the
/// rank-p factors without forming the updated matrices.
pub(crate) fn update_distances(
    p: &StructuredPencil,
    old: &RealSpectralData,
    gamma1: MatRef<'_, f64>,
    target: &SpectralBlocks,
    params: &ParameterSet,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    let mf = middle_factors(gamma1, old.lambda().as_ref(), target, params, tol)?;
    let d = low_rank_delta(p, old.x(), gamma1, &mf, tol)?;
    let dm = crate::linalg::low_rank_spectral_norm(d.a_m.as_ref(), d.b_m.as_ref());
    let dk = crate::linalg::low_rank_spectral_norm(d.a_k.as_ref(), d.b_k.as_ref());
    Ok((dm, dk))
}

/// Inputs of the spectral-decomposition characterization: X (n×n), J₁
/// (n_u×n_u, with MX + KX·diag(J₁, 0) = 0), Γ₁₁ and Φ.
#[derive(Debug, Clone)]
pub struct Theorem1Data {
    pub x: Mat<f64>,
    pub j1: Mat<f64>,
    pub gamma11: Mat<f64>,
    pub phi: Mat<f64>,
}

impl Theorem1Data {
    pub fn n_u(&self) -> usize {
        self.j1.nrows()
    }

    pub fn n_phi(&self) -> usize {
        self.x.nrows() - self.j1.nrows()
    }

    /// Data induced by a solved pencil: X = [X_F, X_∞], J₁ = Λ_F⁻¹,
    /// Γ₁₁ = X_Fᵤᵀ M_u X_Fᵤ, Φ = I.
    pub fn from_pencil(p: &StructuredPencil, tol: &Tolerances) -> Result<Self> {
        let spec = crate::pencil::solve_spectrum(p, tol)?;
        let fin = crate::spectral::to_real_representation(&spec.finite, tol)?;
        let x = crate::linalg::hstack(fin.x(), spec.infinite_basis.as_ref());
        let xu = fin.x_u(p.n_u());
        let gamma11 = symmetrize((xu.transpose() * p.m_u() * xu).as_ref());
        Ok(Self {
            x,
            j1: fin.values().inverse_matrix(),
            gamma11,
            phi: Mat::identity(p.n_phi(), p.n_phi()),
        })
    }

    fn check_dims(&self) -> Result<()> {
        let n = self.x.nrows();
        let nu = self.j1.nrows();
        if self.x.ncols() != n {
            return Err(Error::dims("X must be square"));
        }
        if self.j1.ncols() != nu || nu > n {
            return Err(Error::dims("J₁ must be square of order n_u ≤ n"));
        }
        if self.gamma11.nrows() != nu || self.gamma11.ncols() != nu {
            return Err(Error::dims("Γ₁₁ must have the order of J₁"));
        }
        let nphi = n - nu;
        if self.phi.nrows() != nphi || self.phi.ncols() != nphi {
            return Err(Error::dims(format!("Φ must be {nphi}×{nphi}")));
        }
        Ok(())
    }

    fn t_inverse(&self) -> Mat<f64> {
        let (n, nu) = (self.x.nrows(), self.n_u());
        let xphi = self.x.as_ref().submatrix(nu, 0, n - nu, n);
        let g = block_diag(
            self.gamma11.as_ref(),
            Mat::<f64>::zeros(n - nu, n - nu).as_ref(),
        );
        symmetrize((g + xphi.transpose() * &self.phi * xphi).as_ref())
    }
}

pub const COND_T_NONSINGULAR: &str = "t-nonsingular";
pub const COND_COMMUTE: &str = "j1-gamma-commute";
pub const COND_DECOUPLE: &str = "xu-t-xphi-zero";
pub const COND_PHI: &str = "xphi-t-xphi-equals-phi-inverse";

const T_RCOND: f64 = 1e-13;

fn rel(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Checks the four conditions characterizing a realizable (X, J₁); returns
/// per-condition relative residuals. Fails with `SingularT` when T⁻¹ cannot
/// be inverted.
pub fn verify_theorem1(d: &Theorem1Data, tol: f64) -> Result<CheckReport> {
    d.check_dims()?;
    let (n, nu) = (d.x.nrows(), d.n_u());
    let nphi = n - nu;
    let mut report = CheckReport::default();
    let t_inv = d.t_inverse();
    let rc = rcond(t_inv.as_ref());
    if !(rc >= T_RCOND) {
        return Err(Error::SingularT { rcond: rc });
    }
    report.push_bool(COND_T_NONSINGULAR, rc, true);
    let t = guarded_inverse(t_inv.as_ref(), T_RCOND).map_err(|rcond| Error::SingularT { rcond })?;

    let j = d.j1.as_ref();
    let g = d.gamma11.as_ref();
    let r = j.transpose() * g - g * j;
    report.push(
        COND_COMMUTE,
        rel(spectral_norm(r.as_ref()), spectral_norm(j) * spectral_norm(g)),
        tol,
    );
    if nphi > 0 {
        let xu = d.x.as_ref().submatrix(0, 0, nu, n);
        let xphi = d.x.as_ref().submatrix(nu, 0, nphi, n);
        let nt = spectral_norm(t.as_ref());
        let r = xu * &t * xphi.transpose();
        report.push(
            COND_DECOUPLE,
            rel(
                spectral_norm(r.as_ref()),
                spectral_norm(xu) * nt * spectral_norm(xphi),
            ),
            tol,
        );
        let phi_inv = guarded_inverse(d.phi.as_ref(), T_RCOND).map_err(|rc| Error::Singular {
            what: "Φ",
            rcond: rc,
            threshold: T_RCOND,
        })?;
        let r = xphi * &t * xphi.transpose() - &phi_inv;
        report.push(
            COND_PHI,
            rel(spectral_norm(r.as_ref()), spectral_norm(phi_inv.as_ref())),
            tol,
        );
    }
    Ok(report)
}

/// M_u = (X_u T X_uᵀ)⁻¹ and K = X⁻ᵀ diag(−Γ₁₁J₁⁻¹, K₂₂′) X⁻¹, with K₂₂′ = I
/// unless given. Requires every condition of [`verify_theorem1`] to hold.
pub fn reconstruct_theorem1(
    d: &Theorem1Data,
    k22: Option<MatRef<'_, f64>>,
    tol: f64,
    tols: &Tolerances,
) -> Result<StructuredPencil> {
    let report = verify_theorem1(d, tol)?;
    if let Some(c) = report.failed().next() {
        return Err(Error::ConditionViolated {
            condition: c.name,
            residual: c.residual,
            tolerance: c.threshold,
        });
    }
    let (n, nu) = (d.x.nrows(), d.n_u());
    let nphi = n - nu;
    let default_k22 = Mat::<f64>::identity(nphi, nphi);
    let k22 = k22.unwrap_or(default_k22.as_ref());
    if k22.nrows() != nphi || k22.ncols() != nphi {
        return Err(Error::dims(format!("K₂₂′ must be {nphi}×{nphi}")));
    }
    if relative_asymmetry(k22) > tols.symmetry {
        return Err(Error::AsymmetricInput {
            matrix: "K22'",
            asymmetry: relative_asymmetry(k22),
            tolerance: tols.symmetry,
        });
    }
    let rc = rcond(k22);
    if !(rc >= tols.ill_defined_rcond) {
        return Err(Error::Singular {
            what: "K₂₂′",
            rcond: rc,
            threshold: tols.ill_defined_rcond,
        });
    }
    let t = guarded_inverse(d.t_inverse().as_ref(), T_RCOND)
        .map_err(|rcond| Error::SingularT { rcond })?;
    let xu = d.x.as_ref().submatrix(0, 0, nu, n);
    let xtx = symmetrize((xu * &t * xu.transpose()).as_ref());
    let m_u = guarded_inverse(xtx.as_ref(), tols.ill_defined_rcond).map_err(ill("X_uTX_uᵀ", tols))?;

    let j_inv = guarded_inverse(d.j1.as_ref(), tols.ill_defined_rcond).map_err(ill("J₁", tols))?;
    let top = -(&d.gamma11 * &j_inv);
    let mid = block_diag(symmetrize(top.as_ref()).as_ref(), k22);
    let x_inv = guarded_inverse(d.x.as_ref(), tols.ill_defined_rcond).map_err(ill("X", tols))?;
    let k = x_inv.transpose() * mid * &x_inv;
    StructuredPencil::new(
        symmetrize(m_u.as_ref()),
        symmetrize(k.as_ref()),
        nu,
        nphi,
    )
}
