//! Residual metrics of original and updated systems, the weighted update
//! distance Rec.MK, and its minimization over the free entries of Γ̃₁.

use std::cell::RefCell;

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use faer::{Mat, MatRef};

use crate::config::Tolerances;
use crate::embedding::{
    compute_gamma1, embed, update_distances, MethodChoice, ParamMode, ParameterSet, UpdatedSystem,
};
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::pencil::StructuredPencil;
use crate::spectral::{RealSpectralData, RetainedData, SpectralBlocks};

/// Relative residuals of the replaced and retained eigendata, before and
/// after the update, plus Rec.MK.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub res1_original: f64,
    /// Absent when the retained eigendata was not supplied.
    pub res2_original: Option<f64>,
    pub res1_updated: f64,
    pub res2_updated: Option<f64>,
    pub rec_mk: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub method: &'static str,
    pub mode: &'static str,
}

fn rel(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

fn apply_mass(m_u: MatRef<'_, f64>, x: MatRef<'_, f64>) -> Mat<f64> {
    let n_u = m_u.nrows();
    let mut out = Mat::zeros(x.nrows(), x.ncols());
    out.as_mut()
        .submatrix_mut(0, 0, n_u, x.ncols())
        .copy_from(m_u * x.submatrix(0, 0, n_u, x.ncols()));
    out
}

/// ‖M X Λ + K X‖ / ((‖M‖‖Λ‖ + ‖K‖)‖X‖) for M = diag(M_u, 0), on raw
/// (possibly unsymmetric) coefficient matrices.
pub fn pencil_residual(
    m_u: MatRef<'_, f64>,
    k: MatRef<'_, f64>,
    x: MatRef<'_, f64>,
    lambda: MatRef<'_, f64>,
) -> f64 {
    let r = apply_mass(m_u, x) * lambda + k * x;
    let den = (spectral_norm(m_u) * spectral_norm(lambda) + spectral_norm(k)) * spectral_norm(x);
    rel(spectral_norm(r.as_ref()), den)
}

/// ‖M X₂ + K X₂ Λ₂′‖ / ((‖M‖ + ‖K‖‖Λ₂′‖)‖X₂‖) on raw coefficient matrices.
pub fn retained_pencil_residual(
    m_u: MatRef<'_, f64>,
    k: MatRef<'_, f64>,
    retained: &RetainedData,
) -> f64 {
    let x2 = retained.x2();
    let l2 = retained.lambda2_prime();
    let r = apply_mass(m_u, x2.as_ref()) + k * &x2 * &l2;
    let den =
        (spectral_norm(m_u) + spectral_norm(k) * spectral_norm(l2.as_ref())) * spectral_norm(x2.as_ref());
    rel(spectral_norm(r.as_ref()), den)
}

/// ‖M X Λ + K X‖ / ((‖M‖‖Λ‖ + ‖K‖)‖X‖).
pub fn finite_residual(
    p: &StructuredPencil,
    x: MatRef<'_, f64>,
    lambda: MatRef<'_, f64>,
) -> f64 {
    pencil_residual(p.m_u(), p.k(), x, lambda)
}

/// ‖M X₂ + K X₂ Λ₂′‖ / ((‖M‖ + ‖K‖‖Λ₂′‖)‖X₂‖).
pub fn retained_residual(p: &StructuredPencil, retained: &RetainedData) -> f64 {
    retained_pencil_residual(p.m_u(), p.k(), retained)
}

/// τ₁‖M_u − M̃_u‖/‖M_u‖ + τ₂‖K − K̃‖/‖K‖ from the dense matrices.
pub fn rec_mk(p: &StructuredPencil, u: &UpdatedSystem, tau1: f64, tau2: f64) -> f64 {
    let dm = spectral_norm((p.m_u() - &u.m_u).as_ref());
    let dk = spectral_norm((p.k() - &u.k).as_ref());
    tau1 * rel(dm, p.mass_norm()) + tau2 * rel(dk, p.stiffness_norm())
}

fn check_weights(tau1: f64, tau2: f64) -> Result<()> {
    if !(tau1 > 0.0 && tau1.is_finite() && tau2 > 0.0 && tau2.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "weights must be positive, got tau1 = {tau1}, tau2 = {tau2}"
        )));
    }
    Ok(())
}

pub fn residual_report(
    p: &StructuredPencil,
    u: &UpdatedSystem,
    old: &RealSpectralData,
    retained: Option<&RetainedData>,
    tau1: f64,
    tau2: f64,
) -> Result<ResidualReport> {
    check_weights(tau1, tau2)?;
    if u.m_u.nrows() != p.n_u() || u.k.nrows() != p.n() || old.x().nrows() != p.n() {
        return Err(Error::dims("updated system, pencil and eigendata disagree in size"));
    }
    if u.x1_tilde.ncols() != old.p() {
        return Err(Error::dims("X̃₁ and X₁ have different widths"));
    }
    if let Some(r) = retained {
        if r.x2().nrows() != p.n() || r.x2().ncols() + old.p() != p.n() {
            return Err(Error::dims("retained eigendata must span the other n − p directions"));
        }
    }
    let up = u.pencil();
    let res1_original = finite_residual(p, old.x(), old.lambda().as_ref());
    let res1_updated = finite_residual(&up, u.x1_tilde.as_ref(), u.target.matrix().as_ref());
    Ok(ResidualReport {
        res1_original,
        res2_original: retained.map(|r| retained_residual(p, r)),
        res1_updated,
        res2_updated: retained.map(|r| retained_residual(&up, r)),
        rec_mk: rec_mk(p, u, tau1, tau2),
        tau1,
        tau2,
        method: u.method.as_str(),
        mode: u.params.mode.as_str(),
    })
}

/// Settings of the Γ̃₁ search.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Objective evaluations per run; `None` means 200·p.
    pub max_evals: Option<usize>,
    /// Stop when the standard deviation of the simplex values drops below this.
    pub spread_tol: f64,
    /// Initial simplex edge relative to max(1, ‖seed‖∞).
    pub simplex_scale: f64,
    /// Extra runs from sign-flipped seeds.
    pub restarts: usize,
    pub tau1: f64,
    pub tau2: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_evals: None,
            spread_tol: 1e-10,
            simplex_scale: 0.1,
            restarts: 3,
            tau1: 1.0,
            tau2: 1.0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        check_weights(self.tau1, self.tau2)?;
        if !(self.spread_tol > 0.0) || !(self.simplex_scale > 0.0) {
            return Err(Error::InvalidConfig(
                "spread tolerance and simplex scale must be positive".into(),
            ));
        }
        if self.max_evals == Some(0) {
            return Err(Error::InvalidConfig("evaluation budget must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub best_params: ParameterSet,
    pub best_rec_mk: f64,
    /// Rec.MK at the seed when the seed is the Γ̃₁ = Γ₁ choice.
    pub baseline_rec_mk: Option<f64>,
    pub iterations: u64,
    pub evaluations: usize,
    /// Whether the last run stopped on the spread criterion rather than the
    /// evaluation budget.
    pub converged: bool,
    /// Best objective value seen after each evaluation (non-increasing).
    pub trace: Vec<f64>,
}

/// Objective value returned for parameters where the update is undefined.
pub const PENALTY: f64 = 1e30;

struct Tracker {
    best: Option<(Vec<f64>, f64)>,
    trace: Vec<f64>,
    evals: usize,
    budget: usize,
}

struct RecMkCost<'a> {
    p: &'a StructuredPencil,
    old: &'a RealSpectralData,
    gamma1: MatRef<'a, f64>,
    target: &'a SpectralBlocks,
    theta: MatRef<'a, f64>,
    tol: &'a Tolerances,
    tau1: f64,
    tau2: f64,
    norm_m: f64,
    norm_k: f64,
    tracker: RefCell<Tracker>,
}

#[derive(Debug)]
struct BudgetExhausted;

impl std::fmt::Display for BudgetExhausted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("evaluation budget exhausted")
    }
}

impl std::error::Error for BudgetExhausted {}

impl RecMkCost<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let Ok(params) = ParameterSet::from_free_params(
            self.theta.to_owned(),
            x,
            self.target.s(),
            ParamMode::ChoiceB,
            self.tol,
        ) else {
            return PENALTY;
        };
        match update_distances(self.p, self.old, self.gamma1, self.target, &params, self.tol) {
            Ok((dm, dk)) => {
                let v = self.tau1 * rel(dm, self.norm_m) + self.tau2 * rel(dk, self.norm_k);
                if v.is_finite() {
                    v
                } else {
                    PENALTY
                }
            }
            Err(_) => PENALTY,
        }
    }

    fn record(&self, x: &[f64]) -> std::result::Result<f64, BudgetExhausted> {
        let mut t = self.tracker.borrow_mut();
        if t.evals >= t.budget {
            return Err(BudgetExhausted);
        }
        t.evals += 1;
        drop(t);
        let v = self.value(x);
        let mut t = self.tracker.borrow_mut();
        if t.best.as_ref().is_none_or(|(_, b)| v < *b) {
            t.best = Some((x.to_vec(), v));
        }
        let b = t.best.as_ref().map_or(v, |(_, b)| *b);
        t.trace.push(b);
        Ok(v)
    }
}

/// Borrowing adapter so the tracker survives each optimizer run.
struct CostRef<'c, 'a>(&'c RecMkCost<'a>);

impl CostFunction for CostRef<'_, '_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.0.record(x)?)
    }
}

fn simplex(seed: &[f64], scale: f64) -> Vec<Vec<f64>> {
    let inf = seed.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let h = scale * inf.max(1.0);
    let mut out = vec![seed.to_vec()];
    for i in 0..seed.len() {
        let mut v = seed.to_vec();
        v[i] += h;
        out.push(v);
    }
    out
}

/// Seeds for the restarts: all scalar slots flipped, then every other
/// scalar slot, then the remaining ones.
fn restart_seeds(seed: &[f64], s_tilde: usize, count: usize) -> Vec<Vec<f64>> {
    let scalars: Vec<usize> = (2 * s_tilde..seed.len()).collect();
    let mut out = Vec::new();
    if scalars.is_empty() {
        return out;
    }
    let patterns: [&dyn Fn(usize) -> bool; 3] =
        [&|_| true, &|j| j % 2 == 0, &|j| j % 2 == 1];
    for r in 0..count {
        let flip = patterns[r % 3];
        let mut v = seed.to_vec();
        for (j, &k) in scalars.iter().enumerate() {
            if flip(j) {
                v[k] = -v[k];
            }
        }
        if !out.contains(&v) && v != seed {
            out.push(v);
        }
    }
    out
}

/// Minimizes Rec.MK over the p free entries of Γ̃₁ with Θ held fixed, using
/// Nelder–Mead from `seed` (and sign-flipped restarts). Infeasible points
/// get the objective [`PENALTY`].
pub fn optimize_gamma_tilde(
    p: &StructuredPencil,
    old: &RealSpectralData,
    target: &SpectralBlocks,
    theta: MatRef<'_, f64>,
    seed: &ParameterSet,
    config: &OptimizerConfig,
    tol: &Tolerances,
) -> Result<OptimizationResult> {
    config.validate()?;
    let q = old.p();
    if theta.nrows() != q || theta.ncols() != q || seed.p() != q || target.p() != q {
        return Err(Error::dims("Θ, seed and target must all have order p"));
    }
    if seed.s_tilde() != target.s() {
        return Err(Error::MalformedBlocks(format!(
            "seed has {} pair blocks, target has {}",
            seed.s_tilde(),
            target.s()
        )));
    }
    // Validates Θ.
    ParameterSet::new(
        theta.to_owned(),
        seed.gamma_tilde().to_owned(),
        seed.s_tilde(),
        ParamMode::ChoiceB,
        tol,
    )?;
    let gamma1 = compute_gamma1(p, old.x(), old.s(), tol)?;
    let budget = config.max_evals.unwrap_or(200 * q);
    let cost = RecMkCost {
        p,
        old,
        gamma1: gamma1.matrix.as_ref(),
        target,
        theta,
        tol,
        tau1: config.tau1,
        tau2: config.tau2,
        norm_m: p.mass_norm(),
        norm_k: p.stiffness_norm(),
        tracker: RefCell::new(Tracker {
            best: None,
            trace: Vec::new(),
            evals: 0,
            budget,
        }),
    };

    let x0 = seed.free_params();
    let seed_value = cost.value(&x0);
    if seed_value >= PENALTY {
        // The seed itself is infeasible: surface why.
        let ps = ParameterSet::from_free_params(theta.to_owned(), &x0, target.s(), ParamMode::ChoiceB, tol)?;
        update_distances(p, old, gamma1.matrix.as_ref(), target, &ps, tol)?;
    }
    let baseline = (seed.mode == ParamMode::ChoiceA && seed_value < PENALTY).then_some(seed_value);

    let mut starts = vec![x0.clone()];
    starts.extend(restart_seeds(&x0, target.s(), config.restarts));

    let mut all_trace = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut converged = false;
    for start in starts {
        {
            let mut t = cost.tracker.borrow_mut();
            t.evals = 0;
            t.trace.clear();
            t.best = best.clone();
        }
        let solver = NelderMead::new(simplex(&start, config.simplex_scale))
            .with_sd_tolerance(config.spread_tol)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let run = Executor::new(CostRef(&cost), solver)
            .configure(|s| s.max_iters(budget as u64))
            .run();
        match run {
            Ok(res) => {
                iterations += res.state().get_iter();
                converged = matches!(
                    res.state().get_termination_reason(),
                    Some(argmin::core::TerminationReason::SolverConverged)
                );
            }
            Err(_) => converged = false,
        }
        let t = cost.tracker.borrow();
        evaluations += t.evals;
        all_trace.extend_from_slice(&t.trace);
        best = t.best.clone();
    }

    let (x, v) = best.ok_or(Error::NoFeasiblePoint)?;
    if v >= PENALTY {
        return Err(Error::NoFeasiblePoint);
    }
    let best_params =
        ParameterSet::from_free_params(theta.to_owned(), &x, target.s(), ParamMode::ChoiceB, tol)?;
    Ok(OptimizationResult {
        best_params,
        best_rec_mk: v,
        baseline_rec_mk: baseline,
        iterations,
        evaluations,
        converged,
        trace: all_trace,
    })
}

/// Re-runs the update with the optimized parameters.
pub fn apply_optimum(
    p: &StructuredPencil,
    old: &RealSpectralData,
    target: &SpectralBlocks,
    r: &OptimizationResult,
    method: MethodChoice,
    tol: &Tolerances,
) -> Result<UpdatedSystem> {
    embed(p, old, target, &r.best_params, method, tol)
}
