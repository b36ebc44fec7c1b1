//! Command-line front end: problem specification files in, derived
//! equations and verification reports out.
//!
//! Exit codes: 0 success, 2 spec/usage error, 3 numerical
//! non-convergence (selftest failures exit 1).

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use varfree::contact::{verify_naturality, BoundarySpec as ContactBoundary, VerifyOptions};
use varfree::jet::{print_with, Expr, VarTable};
use varfree::solver::{
    check_film_orthogonality, check_residuals_1d, minimize_1d, relax_film, FilmMesh,
    Initial1D, Problem1D, Profile1D, SolverError, Wall,
};
use varfree::specfile::{Boundary, ProblemSpec, SolverConfig};
use varfree::variational::{euler_lagrange, natural_boundary_conditions};

#[derive(Parser)]
#[command(name = "varfree", version, about = "Euler-Lagrange equations and natural boundary conditions for free-boundary variational problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive Euler-Lagrange equations and natural boundary conditions
    /// (flat boundary).
    Derive {
        spec: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Equivalence/verification tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Seed for randomized equivalence sampling.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Pull the Lagrangian back through the spec's transformation and
    /// verify naturality against the curved boundary.
    Transform {
        spec: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Minimize the discretized problem and report residuals.
    Solve {
        spec: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in invariant suite.
    Selftest {
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

const EXIT_SPEC: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Derive { spec, out, tol, seed } => cmd_derive(&spec, &out, tol, seed),
        Command::Transform { spec, out, tol, seed } => cmd_transform(&spec, &out, tol, seed),
        Command::Solve { spec, out, tol, seed } => cmd_solve(&spec, &out, tol, seed),
        Command::Selftest { tol, seed } => cmd_selftest(tol, seed),
    }
}

fn load_spec(path: &PathBuf) -> Result<ProblemSpec, ExitCode> {
    ProblemSpec::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_SPEC)
    })
}

fn ensure_out_dir(out: &PathBuf) -> Result<(), ExitCode> {
    std::fs::create_dir_all(out).map_err(|e| {
        eprintln!("error: cannot create output directory: {e}");
        ExitCode::from(EXIT_SPEC)
    })
}

fn cmd_derive(path: &PathBuf, out: &PathBuf, _tol: Option<f64>, _seed: Option<u64>) -> ExitCode {
    let spec = match load_spec(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if !matches!(spec.boundary, Boundary::Flat) {
        eprintln!(
            "error: `derive` needs a flat boundary ({{x_n = 0}}); flatten curved boundaries with `varfree transform` first"
        );
        return ExitCode::from(EXIT_SPEC);
    }
    if let Err(code) = ensure_out_dir(out) {
        return code;
    }
    let lagr = &spec.lagrangian;
    let space = lagr.space();
    let el = match euler_lagrange(&space, lagr) {
        Ok(el) => el,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SPEC);
        }
    };
    let nbc = match natural_boundary_conditions(&space, lagr) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SPEC);
        }
    };
    let mut lines = Vec::new();
    for (j, component) in el.iter().enumerate() {
        lines.push(format!(
            "EL[{}]: {} = 0",
            spec.table.dep_name(j),
            print_with(component, &spec.table)
        ));
    }
    for ((j, alpha), condition) in &nbc {
        lines.push(format!(
            "NBC[{}, alpha={}]: {} = 0",
            spec.table.dep_name(*j),
            alpha,
            print_with(condition, &spec.table)
        ));
    }
    let text = lines.join("\n");
    println!("{text}");
    if let Err(e) = std::fs::write(out.join("equations.txt"), format!("{text}\n")) {
        eprintln!("error: cannot write equations.txt: {e}");
        return ExitCode::from(EXIT_SPEC);
    }
    ExitCode::SUCCESS
}

fn cmd_transform(path: &PathBuf, out: &PathBuf, tol: Option<f64>, seed: Option<u64>) -> ExitCode {
    let spec = match load_spec(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let Some(transformation) = &spec.transformation else {
        eprintln!("error: `transform` needs a [transformation] table");
        return ExitCode::from(EXIT_SPEC);
    };
    if transformation.inverse().is_none() {
        eprintln!("error: the transformation needs inverse components (no symbolic inversion)");
        return ExitCode::from(EXIT_SPEC);
    }
    let Boundary::Curves { gamma0, .. } = &spec.boundary else {
        eprintln!("error: `transform` needs a curve boundary (gamma0 is the curve being flattened)");
        return ExitCode::from(EXIT_SPEC);
    };
    if let Err(code) = ensure_out_dir(out) {
        return code;
    }
    let tol = tol.unwrap_or(1e-9);
    let pulled = match varfree::contact::pullback_lagrangian(transformation, &spec.lagrangian) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SPEC);
        }
    };
    let target_table = VarTable::xu(pulled.n(), 1);
    let pulled_text = print_with(pulled.density(), &target_table);
    println!("pullback density: {pulled_text}");

    let mut options = VerifyOptions::default();
    if let Some(seed) = seed {
        options.seed = seed;
    }
    let report = match verify_naturality(
        &spec.lagrangian,
        transformation,
        ContactBoundary::Curve(gamma0),
        &options,
    ) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SPEC);
        }
    };
    println!(
        "naturality: {} samples, max discrepancy {:.3e} (relative {:.3e}), boundary residual {:.3e}",
        report.samples, report.max_discrepancy, report.max_relative, report.boundary_residual
    );
    let json = serde_json::json!({
        "kind": "transform",
        "pullback_density": pulled_text,
        "samples": report.samples,
        "max_discrepancy": report.max_discrepancy,
        "max_relative_discrepancy": report.max_relative,
        "boundary_residual": report.boundary_residual,
        "tol": tol,
        "within_tol": report.within(tol),
    });
    if let Err(e) = write_outputs(out, Some(format!("pullback: {pulled_text}\n")), &json, None) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_SPEC);
    }
    if report.within(tol) {
        ExitCode::SUCCESS
    } else {
        eprintln!("naturality discrepancy exceeds tolerance {tol}");
        ExitCode::from(EXIT_NUMERIC)
    }
}

fn cmd_solve(path: &PathBuf, out: &PathBuf, _tol: Option<f64>, _seed: Option<u64>) -> ExitCode {
    let spec = match load_spec(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let Some(solver) = &spec.solver else {
        eprintln!("error: `solve` needs a [solver] table");
        return ExitCode::from(EXIT_SPEC);
    };
    if let Err(code) = ensure_out_dir(out) {
        return code;
    }
    match &spec.boundary {
        Boundary::Curves { gamma0, gamma1 } => {
            solve_one_dim(&spec, solver, gamma0.clone(), gamma1.clone(), out)
        }
        Boundary::LevelSet { phi } => solve_film(&spec, solver, phi, out),
        Boundary::Flat => {
            eprintln!("error: `solve` needs a curve or level-set boundary");
            ExitCode::from(EXIT_SPEC)
        }
    }
}

fn solve_one_dim(
    spec: &ProblemSpec,
    solver: &SolverConfig,
    gamma0: varfree::contact::BoundaryCurve,
    gamma1: varfree::contact::BoundaryCurve,
    out: &PathBuf,
) -> ExitCode {
    let problem = Problem1D {
        lagrangian: spec.lagrangian.clone(),
        gamma0,
        gamma1,
        initial: Initial1D {
            sigma0: solver.initial_sigma0,
            sigma1: solver.initial_sigma1,
            profile: match &solver.initial_values {
                Some(v) => Profile1D::Values(v.clone()),
                None => Profile1D::Linear,
            },
        },
    };
    let (solution, converged) = match minimize_1d(&problem, solver.n_cells, &solver.settings) {
        Ok(s) => (s, true),
        Err(SolverError::NonConvergence1D { solution }) => (*solution, false),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SPEC);
        }
    };
    let residuals = match check_residuals_1d(&problem, &solution) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SPEC);
        }
    };
    let mut csv = String::from("t,u,u_prime\n");
    for k in 0..solution.grid.len() {
        csv.push_str(&format!(
            "{},{},{}\n",
            solution.grid[k], solution.values[k], solution.derivs[k]
        ));
    }
    println!(
        "action {:.9}  iterations {}  fd-gradient {:.3e}  converged {}",
        solution.action, solution.iterations, solution.grad_norm_fd, converged
    );
    println!(
        "residuals: EL max {:.3e}; transversality {:?}; incidence angles {:?} deg (expected scale {:.1e})",
        residuals.el_residual_max,
        residuals.transversality_residual,
        residuals.incidence_angle_deg,
        residuals.expected_scale
    );
    let json = serde_json::json!({
        "kind": "one_dim",
        "action": solution.action,
        "iterations": solution.iterations,
        "converged": converged,
        "grad_norm_fd": solution.grad_norm_fd,
        "sigma0": solution.sigma0,
        "sigma1": solution.sigma1,
        "el_residual_max": residuals.el_residual_max,
        "transversality_residual": residuals.transversality_residual,
        "incidence_angle_deg": residuals.incidence_angle_deg,
        "expected_scale": residuals.expected_scale,
    });
    if let Err(e) = write_outputs(out, None, &json, Some(csv)) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_SPEC);
    }
    if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERIC)
    }
}

fn solve_film(_spec: &ProblemSpec, solver: &SolverConfig, phi: &Expr, out: &PathBuf) -> ExitCode {
    let wall = match Wall::level_set(phi.clone()) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SPEC);
        }
    };
    let height_expr = solver.initial_height.clone();
    let height = move |t1: f64, t2: f64| -> f64 {
        match &height_expr {
            None => 0.0,
            Some(e) => {
                let mut p = varfree::jet::JetPoint::new();
                p.set(varfree::jet::JetVar::Independent(0), t1);
                p.set(varfree::jet::JetVar::Independent(1), t2);
                varfree::jet::evaluate(e, &p).unwrap_or(0.0)
            }
        }
    };
    let mesh = match FilmMesh::disk(solver.mesh[0], solver.mesh[1], wall, height) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SPEC);
        }
    };
    let relaxed = match relax_film(&mesh, &solver.film) {
        Ok(r) => r,
        Err(e @ SolverError::FilmNonConvergence { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_NUMERIC);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SPEC);
        }
    };
    let ortho = match check_film_orthogonality(&relaxed.mesh) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SPEC);
        }
    };
    let (mean, std) = relaxed.mesh.height_stats();
    println!(
        "area {:.9}  iterations {}  converged {}",
        relaxed.area, relaxed.iterations, relaxed.converged
    );
    println!(
        "heights: mean {mean:.6} std {std:.3e}; wall incidence deviation max {:.4} deg, mean {:.4} deg",
        ortho.max_angle_deviation_deg, ortho.mean_angle_deviation_deg
    );
    let boundary: std::collections::BTreeSet<usize> =
        relaxed.mesh.boundary_indices().into_iter().collect();
    let mut csv = String::from("t1,t2,y,is_boundary\n");
    for (k, p) in relaxed.mesh.positions().into_iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            p[0],
            p[1],
            p[2],
            u8::from(boundary.contains(&k))
        ));
    }
    let json = serde_json::json!({
        "kind": "film",
        "area": relaxed.area,
        "iterations": relaxed.iterations,
        "converged": relaxed.converged,
        "height_mean": mean,
        "height_std": std,
        "max_angle_deviation_deg": ortho.max_angle_deviation_deg,
        "mean_angle_deviation_deg": ortho.mean_angle_deviation_deg,
    });
    if let Err(e) = write_outputs(out, None, &json, Some(csv)) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_SPEC);
    }
    if relaxed.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERIC)
    }
}

fn write_outputs(
    out: &PathBuf,
    equations: Option<String>,
    report: &serde_json::Value,
    csv: Option<String>,
) -> std::io::Result<()> {
    if let Some(text) = equations {
        std::fs::write(out.join("equations.txt"), text)?;
    }
    std::fs::write(out.join("report.json"), format!("{:#}\n", report))?;
    if let Some(csv) = csv {
        std::fs::write(out.join("solution.csv"), csv)?;
    }
    Ok(())
}

fn cmd_selftest(tol: Option<f64>, seed: Option<u64>) -> ExitCode {
    let seed = seed.unwrap_or(0x7357_0001);
    let tol = tol.unwrap_or(1e-9);
    let results = varfree::selftest::run(seed, tol);
    let mut all_ok = true;
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("{tag} {} — {}", r.name, r.detail);
        all_ok &= r.passed;
    }
    if all_ok {
        println!("selftest: {} checks passed", results.len());
        ExitCode::SUCCESS
    } else {
        eprintln!("selftest: failures detected");
        ExitCode::from(1)
    }
}
