//! Flat `key = value` study configuration.
//!
//! One key per line, `#` starts a comment, booleans are true/false, lists
//! are comma-separated. Unknown keys are rejected.

use crate::lgl::MAX_DEGREE;
use crate::mesh::Rect;
use crate::problems::ProblemKind;
use crate::solver::DEFAULT_SEED;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Mesh refinement at fixed degree.
    H { n_list: Vec<usize>, p: usize },
    /// Degree refinement at fixed mesh.
    P { n: usize, p_list: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub problem: ProblemKind,
    pub sweep: Sweep,
    pub alpha: Option<[f64; 2]>,
    pub gamma_a: Option<f64>,
    pub gamma_m: Option<f64>,
    pub stabilized: bool,
    pub q: Option<usize>,
    pub k: usize,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub domain: Option<Rect>,
    pub override_assumption: bool,
}

impl StudyConfig {
    pub fn new(problem: ProblemKind, sweep: Sweep) -> Self {
        StudyConfig {
            problem,
            sweep,
            alpha: None,
            gamma_a: None,
            gamma_m: None,
            stabilized: true,
            q: None,
            k: 3,
            output: None,
            seed: DEFAULT_SEED,
            domain: None,
            override_assumption: false,
        }
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>, String> {
    v.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| format!("bad list entry '{s}'")))
        .collect()
}

pub fn parse_config(text: &str) -> Result<StudyConfig, ConfigError> {
    let mut problem = None;
    let mut sweep_kind: Option<String> = None;
    let mut n_list: Option<Vec<usize>> = None;
    let mut p_list: Option<Vec<usize>> = None;
    let mut n: Option<usize> = None;
    let mut p: Option<usize> = None;
    let mut alpha_minus = None;
    let mut alpha_plus = None;
    let mut gamma_a = None;
    let mut gamma_m = None;
    let mut stabilized = true;
    let mut q = None;
    let mut k = 3usize;
    let mut output = None;
    let mut seed = DEFAULT_SEED;
    let mut domain = None;
    let mut override_assumption = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let err = |msg: String| ConfigError::Parse { line, msg };
        let (key, value) = stripped
            .split_once('=')
            .ok_or_else(|| err("expected 'key = value'".into()))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| err(format!("invalid {what} '{value}'"));
        match key {
            "problem" => {
                problem = Some(
                    crate::problems::registry_problem(value)
                        .map_err(|e| err(e.to_string()))?
                        .kind,
                )
            }
            "sweep" => sweep_kind = Some(value.to_lowercase()),
            "n_list" => n_list = Some(parse_list(value).map_err(&err)?),
            "p_list" => p_list = Some(parse_list(value).map_err(&err)?),
            "n" => n = Some(value.parse().map_err(|_| bad("integer"))?),
            "p" => p = Some(value.parse().map_err(|_| bad("integer"))?),
            "alpha_minus" => alpha_minus = Some(value.parse().map_err(|_| bad("number"))?),
            "alpha_plus" => alpha_plus = Some(value.parse().map_err(|_| bad("number"))?),
            "gamma_a" => gamma_a = Some(value.parse().map_err(|_| bad("number"))?),
            "gamma_m" => gamma_m = Some(value.parse().map_err(|_| bad("number"))?),
            "stabilized" => {
                stabilized = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(bad("boolean")),
                }
            }
            "override_assumption" => {
                override_assumption = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(bad("boolean")),
                }
            }
            "q" => q = Some(value.parse().map_err(|_| bad("integer"))?),
            "k" => k = value.parse().map_err(|_| bad("integer"))?,
            "output" => output = Some(PathBuf::from(value)),
            "seed" => seed = value.parse().map_err(|_| bad("integer"))?,
            "domain" => {
                let v: Vec<f64> = parse_list(value).map_err(&err)?;
                if v.len() != 4 {
                    return Err(err("domain needs x0,x1,y0,y1".into()));
                }
                domain = Some(Rect::new(v[0], v[1], v[2], v[3]));
            }
            _ => return Err(err(format!("unknown key '{key}'"))),
        }
    }

    let problem =
        problem.ok_or_else(|| ConfigError::Invalid("missing 'problem' key".into()))?;
    let sweep = match sweep_kind.as_deref() {
        Some("h") | None if n_list.is_some() => Sweep::H {
            n_list: n_list.unwrap(),
            p: p.ok_or_else(|| ConfigError::Invalid("h sweep needs 'p'".into()))?,
        },
        Some("p") | None if p_list.is_some() => Sweep::P {
            n: n.ok_or_else(|| ConfigError::Invalid("p sweep needs 'n'".into()))?,
            p_list: p_list.unwrap(),
        },
        _ => {
            return Err(ConfigError::Invalid(
                "specify 'n_list' (+ 'p') for an h sweep or 'p_list' (+ 'n') for a p sweep"
                    .into(),
            ))
        }
    };
    validate_sweep(&sweep)?;
    if let (Some(am), Some(ap)) = (&alpha_minus, &alpha_plus) {
        if *am <= 0.0 || *ap <= 0.0 {
            return Err(ConfigError::Invalid("alpha must be positive".into()));
        }
    } else if alpha_minus.is_some() != alpha_plus.is_some() {
        return Err(ConfigError::Invalid(
            "alpha_minus and alpha_plus must be given together".into(),
        ));
    }
    let mut cfg = StudyConfig::new(problem, sweep);
    cfg.alpha = alpha_minus.map(|am| [am, alpha_plus.unwrap()]);
    cfg.gamma_a = gamma_a;
    cfg.gamma_m = gamma_m;
    cfg.stabilized = stabilized;
    cfg.q = q;
    cfg.k = k;
    cfg.output = output;
    cfg.seed = seed;
    cfg.domain = domain;
    cfg.override_assumption = override_assumption;
    Ok(cfg)
}

fn validate_sweep(sweep: &Sweep) -> Result<(), ConfigError> {
    let check = |list: &[usize], what: &str| -> Result<(), ConfigError> {
        if list.is_empty() {
            return Err(ConfigError::Invalid(format!("{what} list is empty")));
        }
        if !list.windows(2).all(|w| w[0] < w[1]) {
            return Err(ConfigError::Invalid(format!(
                "{what} list must be strictly increasing"
            )));
        }
        Ok(())
    };
    match sweep {
        Sweep::H { n_list, p } => {
            check(n_list, "n")?;
            if *p < 1 || *p > MAX_DEGREE {
                return Err(ConfigError::Invalid(format!(
                    "degree p must be in 1..={MAX_DEGREE}"
                )));
            }
        }
        Sweep::P { p_list, n } => {
            check(p_list, "p")?;
            if *n < 2 {
                return Err(ConfigError::Invalid("n must be at least 2".into()));
            }
            if p_list.iter().any(|p| *p < 1 || *p > MAX_DEGREE) {
                return Err(ConfigError::Invalid(format!(
                    "degrees must be in 1..={MAX_DEGREE}"
                )));
            }
        }
    }
    Ok(())
}
