//! Convergence-study drivers: single study points, h- and p-sweeps with
//! least-squares rate fitting, and the fine-grid eigenvalue reference run.
//!
//! Sweep points are independent; they run on a small worker pool bounded by
//! the CUTSPEC_THREADS environment variable (0 or unset = auto) and are
//! collected in deterministic (N, p) order.

use crate::assembly::{
    apply_dirichlet, assemble_ghost_penalty, assemble_load, assemble_mass, assemble_stiffness,
    build_extended_forms, reduce_matrix, AssemblyError, Discretization,
};
use crate::config::{StudyConfig, Sweep};
use crate::mesh::{build_mesh, check_interface_assumption, classify_elements, MeshError};
use crate::norms::{broken_h1_error, broken_l2_error, eigenvalue_errors, NormError};
use crate::problems::Problem;
use crate::solver::{condition_estimate, solve_smallest_eigs, solve_source, SolverError};
use crate::sparse::SparseSymMatrix;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("interface assumption violated at N={n} on {} element(s): {:?}", violations.len(), &violations[..violations.len().min(8)])]
    Geometry { n: usize, violations: Vec<usize> },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error("no records to emit")]
    EmptyRecords,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub problem: String,
    pub n: usize,
    pub h: f64,
    pub p: usize,
    /// Unknowns after Dirichlet elimination.
    pub dofs: usize,
    pub stabilized: bool,
    pub l2: Option<f64>,
    pub h1: Option<f64>,
    /// Relative eigenvalue errors against the problem's reference spectrum
    /// (raw eigenvalues when no reference covers the requested count).
    pub eig: Vec<f64>,
    pub cond_a: Option<f64>,
    pub cond_m: Option<f64>,
    pub runtime: f64,
}

/// Everything a single study point needs besides (N, p).
pub struct PointSettings {
    pub problem: Problem,
    pub alpha: [f64; 2],
    pub gamma_a: f64,
    pub gamma_m: f64,
    pub stabilized: bool,
    pub q: Option<usize>,
    pub k: usize,
    pub seed: u64,
    pub compute_cond: bool,
}

impl PointSettings {
    pub fn from_config(cfg: &StudyConfig) -> Self {
        let problem = Problem::new(cfg.problem);
        let alpha = cfg.alpha.unwrap_or(problem.alpha);
        let gamma_a = cfg.gamma_a.unwrap_or(problem.default_gamma.0);
        let gamma_m = cfg.gamma_m.unwrap_or(problem.default_gamma.1);
        PointSettings {
            problem,
            alpha,
            gamma_a,
            gamma_m,
            stabilized: cfg.stabilized,
            q: cfg.q,
            k: cfg.k,
            seed: cfg.seed,
            compute_cond: true,
        }
    }
}

/// Solve one study point and measure its errors and condition numbers.
pub fn run_point(s: &PointSettings, n: usize, p: usize) -> Result<ConvergenceRecord, HarnessError> {
    let start = Instant::now();
    let levelset = s.problem.levelset();
    let mesh = classify_elements(&build_mesh(s.problem.domain, n)?, &levelset);
    let disc = Discretization::new(mesh, levelset, p, s.alpha, s.q)?;
    let h = disc.h();
    let a = assemble_stiffness(&disc);
    let ghost = if s.stabilized {
        assemble_ghost_penalty(&disc)
    } else {
        SparseSymMatrix::from_triplets(disc.ndofs(), Vec::new())
    };
    let mass = assemble_mass(&disc);
    let (gamma_a, gamma_m) = if s.stabilized { (s.gamma_a, s.gamma_m) } else { (0.0, 0.0) };
    let (a_ext, m_ext) = build_extended_forms(&a, &ghost, &mass, gamma_a, gamma_m, h)?;

    let mut record = ConvergenceRecord {
        problem: s.problem.name().to_string(),
        n,
        h,
        p,
        dofs: disc.dofmap.num_free(),
        stabilized: s.stabilized,
        l2: None,
        h1: None,
        eig: Vec::new(),
        cond_a: None,
        cond_m: None,
        runtime: 0.0,
    };

    if s.problem.eigen {
        let a_red = reduce_matrix(&a_ext, &disc.dofmap);
        let m_red = reduce_matrix(&m_ext, &disc.dofmap);
        let eig = solve_smallest_eigs(&a_red, &m_red, s.k, s.seed)?;
        if let Some(reference) = s.problem.reference_eigenvalues(s.k) {
            record.eig = eigenvalue_errors(&eig.values, &reference)?;
        } else {
            record.eig = eig.values;
        }
        if s.compute_cond {
            record.cond_a = condition_estimate(&a_red).ok();
            record.cond_m = condition_estimate(&m_red).ok();
        }
    } else {
        let exact = s.problem.exact(s.alpha).expect("source problems have exact solutions");
        let source = s.problem.source(s.alpha);
        let jumps = exact.jump_data(s.alpha);
        let mut rhs = assemble_load(&disc, &*source, jumps.as_ref());
        // Dirichlet lift: solve for u − I_h(u|∂Ω), so the boundary values of
        // the manufactured solution move to the right-hand side.
        let lift = boundary_lift(&disc, &exact);
        let mut a_lift = vec![0.0; disc.ndofs()];
        a_ext.matvec(&lift, &mut a_lift);
        for i in 0..disc.ndofs() {
            rhs[i] -= a_lift[i];
        }
        let reduced = apply_dirichlet(&a_ext, &rhs, &disc.dofmap);
        let report = solve_source(&reduced.matrix, &reduced.rhs)?;
        let mut coeffs = reduced.pad(&report.x);
        for i in 0..disc.ndofs() {
            coeffs[i] += lift[i];
        }
        let q_err = disc.q + 2;
        record.l2 = Some(broken_l2_error(&disc, &coeffs, &exact, q_err));
        record.h1 = Some(broken_h1_error(&disc, &coeffs, &exact, q_err));
        if s.compute_cond {
            record.cond_a = condition_estimate(&reduced.matrix).ok();
        }
    }
    record.runtime = start.elapsed().as_secs_f64();
    Ok(record)
}

/// Nodal interpolant of the exact solution on the Dirichlet dofs, zero
/// elsewhere.
pub fn boundary_lift(disc: &Discretization, exact: &crate::norms::ExactSolution) -> Vec<f64> {
    let dm = &disc.dofmap;
    let mut lift = vec![0.0; dm.ndofs];
    for i in 0..dm.ndofs {
        if dm.dirichlet[i] {
            let (x, y) = dm.coords[i];
            lift[i] = (exact.value)(x, y, dm.sides[i]);
        }
    }
    lift
}

/// Least-squares slope of log(err) vs log(h) over the last `window` points.
pub fn fit_loglog_slope(h: &[f64], err: &[f64], window: usize) -> Option<f64> {
    let n = h.len().min(err.len());
    if n < 2 {
        return None;
    }
    let lo = n.saturating_sub(window);
    let xs: Vec<f64> = h[lo..n].iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err[lo..n].iter().map(|v| v.max(1e-300).ln()).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let den: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    (den > 0.0).then(|| num / den)
}

#[derive(Debug, Clone, Default)]
pub struct Slopes {
    pub l2: Option<f64>,
    pub h1: Option<f64>,
    pub cond_a: Option<f64>,
    /// Slope of the mean relative eigenvalue error.
    pub eig: Option<f64>,
}

#[derive(Debug)]
pub struct HSweepResult {
    pub records: Vec<ConvergenceRecord>,
    pub slopes: Slopes,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct PSweepResult {
    pub records: Vec<ConvergenceRecord>,
    /// Strictly decreasing L² (or eigenvalue) error across the degree list.
    pub monotone: bool,
    /// Convexity of log-error vs p: second differences nonnegative up to a
    /// small tolerance (decay may flatten toward machine precision but must
    /// not oscillate concavely).
    pub convex: bool,
    pub warnings: Vec<String>,
}

fn thread_budget(points: usize) -> usize {
    let configured = std::env::var("CUTSPEC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    let auto = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let t = if configured == 0 { auto } else { configured };
    t.clamp(1, points.max(1))
}

/// Run all (n, p) points concurrently and return records sorted by (n, p).
fn run_points(
    s: &PointSettings,
    points: &[(usize, usize)],
) -> Vec<(usize, usize, Result<ConvergenceRecord, HarnessError>)> {
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<(usize, usize, Result<ConvergenceRecord, HarnessError>)>> =
        Mutex::new(Vec::new());
    let workers = thread_budget(points.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= points.len() {
                    break;
                }
                let (n, p) = points[i];
                let res = run_point(s, n, p);
                out.lock().unwrap().push((n, p, res));
            });
        }
    });
    let mut results = out.into_inner().unwrap();
    results.sort_by_key(|(n, p, _)| (*n, *p));
    results
}

/// Pre-flight geometry check for a list of mesh sizes.
fn check_geometry(s: &PointSettings, n_list: &[usize], override_flag: bool) -> Result<Vec<String>, HarnessError> {
    let mut warnings = Vec::new();
    for &n in n_list {
        let levelset = s.problem.levelset();
        let mesh = classify_elements(&build_mesh(s.problem.domain, n)?, &levelset);
        let report = check_interface_assumption(&mesh, &levelset);
        if !report.ok {
            if override_flag {
                warnings.push(format!(
                    "N={n}: interface assumption violated on {} element(s), running anyway",
                    report.violations.len()
                ));
            } else {
                return Err(HarnessError::Geometry { n, violations: report.violations });
            }
        }
    }
    Ok(warnings)
}

pub fn run_h_sweep(cfg: &StudyConfig) -> Result<HSweepResult, HarnessError> {
    let Sweep::H { ref n_list, p } = cfg.sweep else {
        panic!("run_h_sweep needs an h-sweep config");
    };
    let mut s = PointSettings::from_config(cfg);
    if let Some(domain) = cfg.domain {
        s.problem.domain = domain;
    }
    let mut warnings = check_geometry(&s, n_list, cfg.override_assumption)?;
    let points: Vec<(usize, usize)> = n_list.iter().map(|&n| (n, p)).collect();
    let mut records = Vec::new();
    for (n, _p, res) in run_points(&s, &points) {
        match res {
            Ok(r) => records.push(r),
            Err(e) if cfg.override_assumption => {
                warnings.push(format!("N={n}: skipped ({e})"));
            }
            Err(e) => return Err(e),
        }
    }
    if records.is_empty() {
        return Err(HarnessError::EmptyRecords);
    }
    let hs: Vec<f64> = records.iter().map(|r| r.h).collect();
    let pick = |f: &dyn Fn(&ConvergenceRecord) -> Option<f64>| -> Option<Vec<f64>> {
        records.iter().map(f).collect()
    };
    let slopes = Slopes {
        l2: pick(&|r| r.l2).and_then(|e| fit_loglog_slope(&hs, &e, 3)),
        h1: pick(&|r| r.h1).and_then(|e| fit_loglog_slope(&hs, &e, 3)),
        cond_a: pick(&|r| r.cond_a).and_then(|e| fit_loglog_slope(&hs, &e, 3)),
        eig: pick(&|r| {
            (!r.eig.is_empty()).then(|| r.eig.iter().sum::<f64>() / r.eig.len() as f64)
        })
        .and_then(|e| fit_loglog_slope(&hs, &e, 3)),
    };
    Ok(HSweepResult { records, slopes, warnings })
}

pub fn run_p_sweep(cfg: &StudyConfig) -> Result<PSweepResult, HarnessError> {
    let Sweep::P { n, ref p_list } = cfg.sweep else {
        panic!("run_p_sweep needs a p-sweep config");
    };
    let mut s = PointSettings::from_config(cfg);
    if let Some(domain) = cfg.domain {
        s.problem.domain = domain;
    }
    let mut warnings = check_geometry(&s, &[n], cfg.override_assumption)?;
    let points: Vec<(usize, usize)> = p_list.iter().map(|&p| (n, p)).collect();
    let mut records = Vec::new();
    for (_n, p, res) in run_points(&s, &points) {
        match res {
            Ok(r) => records.push(r),
            Err(e) if cfg.override_assumption => warnings.push(format!("p={p}: skipped ({e})")),
            Err(e) => return Err(e),
        }
    }
    if records.is_empty() {
        return Err(HarnessError::EmptyRecords);
    }
    // One error series drives the diagnostics: L² for source problems, the
    // mean eigenvalue error otherwise.
    let series: Vec<f64> = records
        .iter()
        .map(|r| {
            r.l2.unwrap_or_else(|| {
                if r.eig.is_empty() {
                    f64::NAN
                } else {
                    r.eig.iter().sum::<f64>() / r.eig.len() as f64
                }
            })
        })
        .collect();
    let monotone = series.windows(2).all(|w| w[1] < w[0]);
    let logs: Vec<f64> = series.iter().map(|e| e.max(1e-300).log10()).collect();
    let convex = logs
        .windows(3)
        .all(|w| (w[2] - w[1]) - (w[1] - w[0]) >= -0.1);
    Ok(PSweepResult { records, monotone, convex, warnings })
}

/// The documented fine-grid eigenvalue reference: stabilized N=96, p=4 run
/// of the circular-interface eigenproblem with its default constants,
/// returning the first three eigenvalues.
pub fn eigen_reference_oracle() -> Result<Vec<f64>, HarnessError> {
    let problem = Problem::new(crate::problems::ProblemKind::CircleEigen);
    let s = PointSettings {
        alpha: problem.alpha,
        gamma_a: problem.default_gamma.0,
        gamma_m: problem.default_gamma.1,
        problem,
        stabilized: true,
        q: None,
        k: 3,
        seed: crate::solver::DEFAULT_SEED,
        compute_cond: false,
    };
    let levelset = s.problem.levelset();
    let mesh = classify_elements(&build_mesh(s.problem.domain, 96)?, &levelset);
    let disc = Discretization::new(mesh, levelset, 4, s.alpha, None)?;
    let h = disc.h();
    let a = assemble_stiffness(&disc);
    let ghost = assemble_ghost_penalty(&disc);
    let mass = assemble_mass(&disc);
    let (a_ext, m_ext) = build_extended_forms(&a, &ghost, &mass, s.gamma_a, s.gamma_m, h)?;
    let a_red = reduce_matrix(&a_ext, &disc.dofmap);
    let m_red = reduce_matrix(&m_ext, &disc.dofmap);
    let eig = solve_smallest_eigs(&a_red, &m_red, 3, s.seed)?;
    Ok(eig.values)
}

/// Human-readable table mirroring the CSV, plus fitted slopes.
pub fn render_table(records: &[ConvergenceRecord], slopes: Option<&Slopes>) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>4} {:>10} {:>2} {:>8} {:>5} {:>12} {:>12} {:>12} {:>10} {:>10} {:>8}\n",
        "problem", "N", "h", "p", "dofs", "stab", "l2", "h1", "eig(max)", "condA", "condM", "time"
    ));
    for r in records {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into());
        let eig = r.eig.iter().cloned().fold(f64::NAN, f64::max);
        out.push_str(&format!(
            "{:<14} {:>4} {:>10.4e} {:>2} {:>8} {:>5} {:>12} {:>12} {:>12} {:>10} {:>10} {:>7.2}s\n",
            r.problem,
            r.n,
            r.h,
            r.p,
            r.dofs,
            r.stabilized,
            fmt(r.l2),
            fmt(r.h1),
            if r.eig.is_empty() { "-".into() } else { format!("{eig:.4e}") },
            fmt(r.cond_a).trim_start_matches('-'),
            fmt(r.cond_m).trim_start_matches('-'),
            r.runtime,
        ));
    }
    if let Some(s) = slopes {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:+.3}")).unwrap_or_else(|| "n/a".into());
        out.push_str(&format!(
            "slopes (last 3, log-log vs h): l2 {}  h1 {}  condA {}  eig {}\n",
            fmt(s.l2),
            fmt(s.h1),
            fmt(s.cond_a),
            fmt(s.eig)
        ));
    }
    out
}
