//! Subcommand implementations. Every command returns the report it printed;
//! file-producing commands also write it next to their outputs.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use faer::{c64, Mat};
use sha2::{Digest, Sha256};
use spilloverfree::embedding::{compute_gamma1, default_gamma_tilde, embed, ParamMode, ParameterSet};
use spilloverfree::io::{
    format_matrix, format_spectral, format_spectral_values, read_matrix, read_spectral,
    read_spectral_file, Report,
};
use spilloverfree::objective::{
    optimize_gamma_tilde, pencil_residual, residual_report, retained_pencil_residual,
    OptimizerConfig,
};
use spilloverfree::spectral::{retained_eigendata, select_eigendata, RetainedData};
use spilloverfree::{
    generate_scenario, solve_spectrum, Error, MethodChoice, ProblemSpec, RealSpectralData,
    SpectralBlocks, StructuredPencil, Tolerances, UpdatedSystem,
};

use crate::args::{
    Command, DemoArgs, EmbedArgs, GenArgs, OptimizeArgs, SolveArgs, ThetaArg, VerifyArgs,
};
use crate::exit::CliError;

type CliResult<T> = std::result::Result<T, CliError>;

pub const M_U: &str = "m_u.mtx";
pub const K: &str = "k.mtx";
pub const OLD: &str = "old.spec";
pub const TARGET: &str = "target.spec";
pub const THETA: &str = "theta.mtx";
pub const SPECTRUM: &str = "spectrum.spec";
pub const M_U_TILDE: &str = "m_u_tilde.mtx";
pub const K_TILDE: &str = "k_tilde.mtx";
pub const THETA_USED: &str = "theta_used.mtx";
pub const GAMMA_TILDE: &str = "gamma_tilde.mtx";
pub const TARGET_USED: &str = "target_used.spec";
pub const UPDATE_REPORT: &str = "update.report";

pub fn run(cmd: Command) -> CliResult<Report> {
    match cmd {
        Command::Gen(a) => gen(&a),
        Command::Solve(a) => solve(&a),
        Command::Embed(a) => embed_cmd(&a, None),
        Command::Optimize(a) => optimize_cmd(&a),
        Command::Verify(a) => verify(&a),
        Command::Demo(a) => demo(&a),
    }
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_artifact(dir: &Path, name: &str, text: &str, report: &mut Report) -> CliResult<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    report.push(&format!("sha256.{name}"), sha256_hex(text.as_bytes()));
    Ok(())
}

fn hash_input(dir: &Path, name: &str, report: &mut Report) -> CliResult<()> {
    let path = dir.join(name);
    let bytes = std::fs::read(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    report.push(&format!("sha256.{name}"), sha256_hex(&bytes));
    Ok(())
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    Ok(())
}

fn fmt_c(v: c64) -> String {
    if v.im == 0.0 {
        format!("{:e}", v.re)
    } else {
        format!("{:e}{:+e}i", v.re, v.im)
    }
}

fn fmt_list(vs: &[c64]) -> String {
    vs.iter().map(|v| fmt_c(*v)).collect::<Vec<_>>().join(", ")
}

fn tolerances(t: Tolerances) -> CliResult<Tolerances> {
    t.validate()?;
    Ok(t)
}

fn load_pencil(dir: &Path, tol: &Tolerances) -> CliResult<StructuredPencil> {
    let m_u = read_matrix(dir.join(M_U))?;
    let k = read_matrix(dir.join(K))?;
    let n_u = m_u.nrows();
    if k.nrows() < n_u {
        return Err(Error::DimensionMismatch(format!(
            "K has order {} but M_u has order {n_u}",
            k.nrows()
        ))
        .into());
    }
    let n_phi = k.nrows() - n_u;
    Ok(spilloverfree::pencil::validate_pencil(m_u.as_ref(), k.as_ref(), n_u, n_phi, tol)?)
}

fn gen(a: &GenArgs) -> CliResult<Report> {
    let p = &a.problem;
    let spec = ProblemSpec {
        n_u: p.nu,
        n_phi: p.nphi,
        p: p.p,
        s: p.s,
        s_tilde: p.stilde,
        max_perturbation: p.max_perturb,
        seed: p.seed,
    };
    let sc = generate_scenario(&spec)?;
    ensure_dir(&a.out)?;
    let mut r = Report::new();
    r.timestamp = Some(timestamp());
    r.push("command", "gen")
        .push("seed", spec.seed)
        .push("n_u", spec.n_u)
        .push("n_phi", spec.n_phi)
        .push("p", spec.p)
        .push("s", spec.s)
        .push("s_tilde", spec.s_tilde)
        .push_f64("max_perturbation", spec.max_perturbation)
        .push("old_eigenvalues", fmt_list(&sc.old.values().eigenvalues()))
        .push("target_eigenvalues", fmt_list(&sc.target.eigenvalues()));
    write_artifact(&a.out, M_U, &format_matrix(&sc.pencil.m_u().to_owned(), true), &mut r)?;
    write_artifact(&a.out, K, &format_matrix(&sc.pencil.k().to_owned(), true), &mut r)?;
    write_artifact(&a.out, OLD, &format_spectral(&sc.old), &mut r)?;
    write_artifact(&a.out, TARGET, &format_spectral_values(&sc.target), &mut r)?;
    write_artifact(&a.out, THETA, &format_matrix(&sc.theta, false), &mut r)?;
    r.write(a.out.join("gen.report"))?;
    Ok(r)
}

fn solve(a: &SolveArgs) -> CliResult<Report> {
    let tol = tolerances(a.tol.tolerances())?;
    let p = load_pencil(&a.input, &tol)?;
    let spec = solve_spectrum(&p, &tol)?;
    let real = spilloverfree::spectral::to_real_representation(&spec.finite, &tol)?;
    ensure_dir(&a.out)?;
    let mut r = Report::new();
    r.timestamp = Some(timestamp());
    r.push("command", "solve");
    hash_input(&a.input, M_U, &mut r)?;
    hash_input(&a.input, K, &mut r)?;
    let margin = spec.margins.iter().copied().fold(f64::INFINITY, f64::min);
    r.push("n_u", p.n_u())
        .push("n_phi", p.n_phi())
        .push("finite_eigenvalues", spec.finite.len())
        .push("infinite_eigenvalues", p.n_phi())
        .push("conjugate_pairs", real.s())
        .push_f64("spectral_radius", spec.spectral_radius())
        .push_f64("min_eigenvalue_gap", margin)
        .push_f64(
            "residual",
            pencil_residual(p.m_u(), p.k(), real.x(), real.lambda().as_ref()),
        );
    write_artifact(&a.out, SPECTRUM, &format_spectral(&real), &mut r)?;
    r.write(a.out.join("solve.report"))?;
    Ok(r)
}

/// Inputs of an update, read from the problem directory.
struct UpdateInputs {
    pencil: StructuredPencil,
    old: RealSpectralData,
    target: SpectralBlocks,
    theta: Mat<f64>,
    retained: RetainedData,
    theta_source: &'static str,
}

fn load_update_inputs(a: &EmbedArgs, tol: &Tolerances) -> CliResult<UpdateInputs> {
    let pencil = load_pencil(&a.input, tol)?;
    let old = read_spectral(a.input.join(OLD))?;
    let target_path = a.input.join(TARGET);
    let target = if target_path.exists() {
        read_spectral_file(&target_path)?.values
    } else {
        old.values().clone()
    };
    let (theta, theta_source) = match a.theta {
        ThetaArg::Identity => (Mat::identity(old.p(), old.p()), "identity"),
        ThetaArg::Input => (read_matrix(a.input.join(THETA))?, "input"),
    };
    // Retained eigendata for the no-spillover residual: re-solve and take
    // everything not matching the replaced eigenvalues.
    let spec = solve_spectrum(&pencil, tol)?;
    let (_, sel) = select_eigendata(&spec, &old.values().eigenvalues(), tol)?;
    let retained = retained_eigendata(&spec, &sel, tol)?;
    spilloverfree::spectral::check_target_disjointness(&target, &retained.eigenvalues(), tol)?;
    Ok(UpdateInputs {
        pencil,
        old,
        target,
        theta,
        retained,
        theta_source,
    })
}

fn write_update(
    a: &EmbedArgs,
    inp: &UpdateInputs,
    u: &UpdatedSystem,
    mut r: Report,
) -> CliResult<Report> {
    let rep = residual_report(&inp.pencil, u, &inp.old, Some(&inp.retained), a.tau1, a.tau2)?;
    r.push("method", rep.method)
        .push("mode", rep.mode)
        .push("theta", inp.theta_source)
        .push("p", inp.old.p())
        .push("s", inp.old.s())
        .push("s_tilde", inp.target.s())
        .push("old_eigenvalues", fmt_list(&inp.old.values().eigenvalues()))
        .push("target_eigenvalues", fmt_list(&inp.target.eigenvalues()))
        .push_f64("res1_original", rep.res1_original)
        .push_opt_f64("res2_original", rep.res2_original)
        .push_f64("res1_updated", rep.res1_updated)
        .push_opt_f64("res2_updated", rep.res2_updated)
        .push_f64("tau1", rep.tau1)
        .push_f64("tau2", rep.tau2)
        .push_f64("rec_mk", rep.rec_mk);
    ensure_dir(&a.out)?;
    for name in [M_U, K, OLD] {
        hash_input(&a.input, name, &mut r)?;
    }
    write_artifact(&a.out, M_U_TILDE, &format_matrix(&u.m_u, true), &mut r)?;
    write_artifact(&a.out, K_TILDE, &format_matrix(&u.k, true), &mut r)?;
    write_artifact(&a.out, THETA_USED, &format_matrix(&u.params.theta().to_owned(), false), &mut r)?;
    write_artifact(
        &a.out,
        GAMMA_TILDE,
        &format_matrix(&u.params.gamma_tilde().to_owned(), true),
        &mut r,
    )?;
    write_artifact(&a.out, TARGET_USED, &format_spectral_values(&inp.target), &mut r)?;
    // verify needs the originals next to the outputs
    if a.out != a.input {
        for name in [M_U, K, OLD] {
            let from = a.input.join(name);
            let to = a.out.join(name);
            std::fs::copy(&from, &to).map_err(|e| Error::Io(format!("{}: {e}", to.display())))?;
        }
    }
    r.write(a.out.join(UPDATE_REPORT))?;
    Ok(r)
}

fn embed_cmd(a: &EmbedArgs, _unused: Option<()>) -> CliResult<Report> {
    let tol = tolerances(a.tol.tolerances())?;
    let inp = load_update_inputs(a, &tol)?;
    let g1 = compute_gamma1(&inp.pencil, inp.old.x(), inp.old.s(), &tol)?;
    let seed = default_gamma_tilde(&g1, inp.old.s(), inp.target.s())?;
    let params = ParameterSet::new(
        inp.theta.clone(),
        seed.params.gamma_tilde().to_owned(),
        inp.target.s(),
        seed.params.mode,
        &tol,
    )?;
    let u = embed(&inp.pencil, &inp.old, &inp.target, &params, a.method.into(), &tol)?;
    let mut r = Report::new();
    r.timestamp = Some(timestamp());
    r.push("command", "embed")
        .push("choice_a_available", seed.choice_a_available)
        .push_f64("gamma1_structure_residual", g1.structure_residual);
    write_update(a, &inp, &u, r)
}

fn optimize_cmd(a: &OptimizeArgs) -> CliResult<Report> {
    let e = &a.embed;
    let tol = tolerances(e.tol.tolerances())?;
    let inp = load_update_inputs(e, &tol)?;
    let g1 = compute_gamma1(&inp.pencil, inp.old.x(), inp.old.s(), &tol)?;
    let seed = default_gamma_tilde(&g1, inp.old.s(), inp.target.s())?;
    let seed_params = ParameterSet::new(
        inp.theta.clone(),
        seed.params.gamma_tilde().to_owned(),
        inp.target.s(),
        seed.params.mode,
        &tol,
    )?;
    let config = OptimizerConfig {
        max_evals: a.max_evals,
        restarts: a.restarts,
        tau1: e.tau1,
        tau2: e.tau2,
        ..OptimizerConfig::default()
    };
    let opt = optimize_gamma_tilde(
        &inp.pencil,
        &inp.old,
        &inp.target,
        inp.theta.as_ref(),
        &seed_params,
        &config,
        &tol,
    )?;
    let u = embed(&inp.pencil, &inp.old, &inp.target, &opt.best_params, e.method.into(), &tol)?;
    let mut r = Report::new();
    r.timestamp = Some(timestamp());
    r.push("command", "optimize")
        .push("choice_a_available", seed.choice_a_available)
        .push_opt_f64("baseline_rec_mk", opt.baseline_rec_mk)
        .push_f64("optimized_rec_mk", opt.best_rec_mk)
        .push("evaluations", opt.evaluations)
        .push("iterations", opt.iterations)
        .push("converged", opt.converged)
        .push(
            "gamma_tilde_params",
            opt.best_params
                .free_params()
                .iter()
                .map(|v| format!("{v:e}"))
                .collect::<Vec<_>>()
                .join(" "),
        );
    write_update(e, &inp, &u, r)
}

fn verify(a: &VerifyArgs) -> CliResult<Report> {
    let tol = tolerances(a.tol.tolerances())?;
    if !(a.tol_residual > 0.0) {
        return Err(Error::InvalidConfig("residual tolerance must be positive".into()).into());
    }
    let dir = &a.input;
    let stored = Report::read(dir.join(UPDATE_REPORT))?;
    let pencil = load_pencil(dir, &tol)?;
    let old = read_spectral(dir.join(OLD))?;
    let target = read_spectral_file(dir.join(TARGET_USED))?.values;
    let theta = read_matrix(dir.join(THETA_USED))?;
    // Raw matrices: a tampered file must show up as a residual, not be
    // silently symmetrized away.
    let m_u_t = read_matrix(dir.join(M_U_TILDE))?;
    let k_t = read_matrix(dir.join(K_TILDE))?;
    if m_u_t.nrows() != pencil.n_u() || k_t.nrows() != pencil.n() || theta.nrows() != old.p() {
        return Err(Error::DimensionMismatch("stored update does not match the pencil".into()).into());
    }
    let spec = solve_spectrum(&pencil, &tol)?;
    let (_, sel) = select_eigendata(&spec, &old.values().eigenvalues(), &tol)?;
    let retained = retained_eigendata(&spec, &sel, &tol)?;

    let x1t = old.x() * &theta;
    let res1 = pencil_residual(m_u_t.as_ref(), k_t.as_ref(), x1t.as_ref(), target.matrix().as_ref());
    let res2 = retained_pencil_residual(m_u_t.as_ref(), k_t.as_ref(), &retained);
    let asym = spilloverfree::linalg::relative_asymmetry(k_t.as_ref())
        .max(spilloverfree::linalg::relative_asymmetry(m_u_t.as_ref()));

    let mut r = Report::new();
    r.timestamp = Some(timestamp());
    r.push("command", "verify")
        .push_f64("tolerance", a.tol_residual)
        .push_f64("res1_updated", res1)
        .push_f64("res2_updated", res2)
        .push_f64("asymmetry", asym);
    let mut failures = Vec::new();
    if !(res1 <= a.tol_residual) {
        failures.push(format!("replaced-eigenpair residual {res1:.3e} > {:.1e}", a.tol_residual));
    }
    if !(res2 <= a.tol_residual) {
        failures.push(format!("retained-eigenpair residual {res2:.3e} > {:.1e}", a.tol_residual));
    }
    if !(asym <= tol.symmetry) {
        failures.push(format!("updated matrices asymmetric ({asym:.3e})"));
    }
    let mut mismatched = Vec::new();
    for (key, expected) in stored.entries() {
        if let Some(name) = key.strip_prefix("sha256.") {
            let path = dir.join(name);
            let actual = std::fs::read(&path)
                .map(|b| sha256_hex(&b))
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            if &actual != expected {
                mismatched.push(name.to_string());
            }
        }
    }
    r.push("hash_mismatches", if mismatched.is_empty() { "none".into() } else { mismatched.join(" ") });
    r.push("passed", failures.is_empty() && mismatched.is_empty());
    print!("{}", r.render());
    if !failures.is_empty() {
        return Err(CliError::VerificationFailed(failures.join("; ")));
    }
    if !mismatched.is_empty() {
        return Err(CliError::ArtifactMismatch(format!(
            "files differ from the hashes recorded in {UPDATE_REPORT}: {}",
            mismatched.join(", ")
        )));
    }
    // already printed
    Ok(Report::new())
}

fn demo(a: &DemoArgs) -> CliResult<Report> {
    let base = if a.example == 1 {
        ProblemSpec::same_structure(a.seed)
    } else {
        ProblemSpec::restructured(a.seed)
    };
    let spec = ProblemSpec {
        n_u: a.nu,
        n_phi: a.nphi,
        max_perturbation: a.max_perturb,
        ..base
    };
    let tol = Tolerances::default();
    let method: MethodChoice = a.method.into();
    let sc = generate_scenario(&spec)?;
    let mut r = Report::new();
    r.timestamp = Some(timestamp());
    r.push("command", "demo")
        .push("example", a.example)
        .push("seed", a.seed)
        .push("n_u", spec.n_u)
        .push("n_phi", spec.n_phi)
        .push("p", spec.p)
        .push("s", spec.s)
        .push("s_tilde", spec.s_tilde)
        .push("old_eigenvalues", fmt_list(&sc.old.values().eigenvalues()))
        .push("target_eigenvalues", fmt_list(&sc.target.eigenvalues()));

    let g1 = compute_gamma1(&sc.pencil, sc.old.x(), sc.old.s(), &tol)?;
    let seed = default_gamma_tilde(&g1, sc.old.s(), sc.target.s())?;
    let seed_params = ParameterSet::new(
        sc.theta.clone(),
        seed.params.gamma_tilde().to_owned(),
        sc.target.s(),
        seed.params.mode,
        &tol,
    )?;
    r.push("choice_a_available", seed.choice_a_available);
    if seed.choice_a_available {
        let u = embed(&sc.pencil, &sc.old, &sc.target, &seed_params, method, &tol)?;
        let rep = residual_report(&sc.pencil, &u, &sc.old, Some(&sc.retained), a.tau1, a.tau2)?;
        r.push_f64("res1_original", rep.res1_original)
            .push_opt_f64("res2_original", rep.res2_original)
            .push("a.method", rep.method)
            .push_f64("a.res1_updated", rep.res1_updated)
            .push_opt_f64("a.res2_updated", rep.res2_updated)
            .push_f64("a.rec_mk", rep.rec_mk);
    }
    let config = OptimizerConfig {
        tau1: a.tau1,
        tau2: a.tau2,
        ..OptimizerConfig::default()
    };
    let opt = optimize_gamma_tilde(
        &sc.pencil,
        &sc.old,
        &sc.target,
        sc.theta.as_ref(),
        &seed_params,
        &config,
        &tol,
    )?;
    let u = embed(&sc.pencil, &sc.old, &sc.target, &opt.best_params, method, &tol)?;
    debug_assert_eq!(u.params.mode, ParamMode::ChoiceB);
    let rep = residual_report(&sc.pencil, &u, &sc.old, Some(&sc.retained), a.tau1, a.tau2)?;
    if !seed.choice_a_available {
        r.push_f64("res1_original", rep.res1_original)
            .push_opt_f64("res2_original", rep.res2_original);
    }
    r.push("b.method", rep.method)
        .push_f64("b.res1_updated", rep.res1_updated)
        .push_opt_f64("b.res2_updated", rep.res2_updated)
        .push_f64("b.rec_mk", rep.rec_mk)
        .push("b.evaluations", opt.evaluations)
        .push("b.converged", opt.converged);
    if let Some(out) = &a.out {
        let path: PathBuf = out.clone();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        r.write(&path)?;
    }
    Ok(r)
}
