//! Discrete-function evaluation and error measurement: broken L²/H¹ errors
//! against exact solutions, the discrete energy norm, and eigenvalue errors.

use crate::assembly::{Discretization, JumpData};
use crate::mesh::Side;
use crate::quadrature::cut_volume_rule;
use crate::sparse::SparseSymMatrix;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NormError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

pub type ScalarField = Arc<dyn Fn(f64, f64, Side) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(f64, f64, Side) -> (f64, f64) + Send + Sync>;

/// A manufactured solution with per-side value and gradient and, when the
/// interface data is nonhomogeneous, the jump closures derived from them.
#[derive(Clone)]
pub struct ExactSolution {
    pub value: ScalarField,
    pub gradient: VectorField,
    pub homogeneous_jumps: bool,
}

impl ExactSolution {
    pub fn jump_data(&self, alpha: [f64; 2]) -> Option<JumpData> {
        if self.homogeneous_jumps {
            return None;
        }
        let v = self.value.clone();
        let g = self.gradient.clone();
        Some(JumpData {
            g_d: Box::new(move |x, y| v(x, y, Side::Pos) - v(x, y, Side::Neg)),
            g_n: Box::new(move |x, y, n| {
                let gp = g(x, y, Side::Pos);
                let gm = g(x, y, Side::Neg);
                alpha[1] * (gp.0 * n.0 + gp.1 * n.1) - alpha[0] * (gm.0 * n.0 + gm.1 * n.1)
            }),
        })
    }
}

/// Side-aware evaluator over a coefficient vector on the full dof space.
pub struct DiscreteFunction<'a> {
    pub disc: &'a Discretization,
    pub coeffs: &'a [f64],
}

impl<'a> DiscreteFunction<'a> {
    pub fn new(disc: &'a Discretization, coeffs: &'a [f64]) -> Self {
        assert_eq!(coeffs.len(), disc.ndofs());
        DiscreteFunction { disc, coeffs }
    }

    /// Value and gradient of the requested side's field at (x, y); None when
    /// that side has no dofs on the containing element.
    pub fn eval(&self, x: f64, y: f64, side: Side) -> Option<(f64, (f64, f64))> {
        let mesh = &self.disc.mesh;
        let ex = (((x - mesh.domain.x0) / mesh.hx).floor() as i64).clamp(0, mesh.n as i64 - 1);
        let ey = (((y - mesh.domain.y0) / mesh.hy).floor() as i64).clamp(0, mesh.n as i64 - 1);
        let e = mesh.element_index(ex as usize, ey as usize);
        let dofs = self.disc.dofmap.element_dofs(mesh, e, side)?;
        let rect = mesh.element_rect(e);
        let nd = self.disc.basis.ndofs();
        let mut v = vec![0.0; nd];
        let mut ds = vec![0.0; nd];
        let mut dt = vec![0.0; nd];
        let s = (2.0 * (x - rect.x0) / rect.width() - 1.0).clamp(-1.0, 1.0);
        let t = (2.0 * (y - rect.y0) / rect.height() - 1.0).clamp(-1.0, 1.0);
        self.disc.basis.eval(s, t, &mut v, &mut ds, &mut dt);
        let (jx, jy) = (2.0 / rect.width(), 2.0 / rect.height());
        let mut val = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        for a in 0..nd {
            let c = self.coeffs[dofs[a]];
            val += c * v[a];
            gx += c * ds[a] * jx;
            gy += c * dt[a] * jy;
        }
        Some((val, (gx, gy)))
    }
}

fn broken_error(
    disc: &Discretization,
    coeffs: &[f64],
    exact: &ExactSolution,
    q: usize,
    gradient: bool,
) -> f64 {
    let nd = disc.basis.ndofs();
    let mut acc = 0.0;
    let mut v = vec![0.0; nd];
    let mut ds = vec![0.0; nd];
    let mut dt = vec![0.0; nd];
    for e in 0..disc.mesh.num_elements() {
        let rect = disc.mesh.element_rect(e);
        let class = disc.mesh.class(e);
        let (jx, jy) = (2.0 / rect.width(), 2.0 / rect.height());
        for side in Side::BOTH {
            let Some(dofs) = disc.dofmap.element_dofs(&disc.mesh, e, side) else {
                continue;
            };
            let rule = cut_volume_rule(&rect, class, &disc.levelset, side, q)
                .expect("error-norm quadrature");
            for (&(x, y), &w) in rule.points.iter().zip(&rule.weights) {
                let s = (2.0 * (x - rect.x0) / rect.width() - 1.0).clamp(-1.0, 1.0);
                let t = (2.0 * (y - rect.y0) / rect.height() - 1.0).clamp(-1.0, 1.0);
                disc.basis.eval(s, t, &mut v, &mut ds, &mut dt);
                if gradient {
                    let mut gx = 0.0;
                    let mut gy = 0.0;
                    for a in 0..nd {
                        gx += coeffs[dofs[a]] * ds[a] * jx;
                        gy += coeffs[dofs[a]] * dt[a] * jy;
                    }
                    let (ex, ey) = (exact.gradient)(x, y, side);
                    acc += w * ((gx - ex) * (gx - ex) + (gy - ey) * (gy - ey));
                } else {
                    let mut uh = 0.0;
                    for a in 0..nd {
                        uh += coeffs[dofs[a]] * v[a];
                    }
                    let d = uh - (exact.value)(x, y, side);
                    acc += w * d * d;
                }
            }
        }
    }
    acc.sqrt()
}

/// Broken L² error √(Σ_sides ∫ (u_h − u)²) with cut-cell quadrature.
pub fn broken_l2_error(
    disc: &Discretization,
    coeffs: &[f64],
    exact: &ExactSolution,
    q: usize,
) -> f64 {
    broken_error(disc, coeffs, exact, q, false)
}

/// Broken H¹ seminorm error √(Σ_sides ∫ |∇u_h − ∇u|²).
pub fn broken_h1_error(
    disc: &Discretization,
    coeffs: &[f64],
    exact: &ExactSolution,
    q: usize,
) -> f64 {
    broken_error(disc, coeffs, exact, q, true)
}

/// Discrete energy norm: ‖∇v‖²(both sides) + (h/p²)Σ‖{α∂ₙv}‖²_{Γ_K}
/// + (p²/h)Σ‖⟦v⟧‖²_{Γ_K} + (1/h²) g(v,v), square-rooted.
pub fn energy_norm(disc: &Discretization, coeffs: &[f64], ghost: &SparseSymMatrix) -> f64 {
    let nd = disc.basis.ndofs();
    let p = disc.degree() as f64;
    let h = disc.h();
    let mut acc = 0.0;
    let mut v = vec![0.0; nd];
    let mut ds = vec![0.0; nd];
    let mut dt = vec![0.0; nd];
    for e in 0..disc.mesh.num_elements() {
        let rect = disc.mesh.element_rect(e);
        let (jx, jy) = (2.0 / rect.width(), 2.0 / rect.height());
        for side in Side::BOTH {
            let (Some(dofs), Some(rule)) = (
                disc.dofmap.element_dofs(&disc.mesh, e, side),
                disc.rules[e].volume[side.idx()].as_ref(),
            ) else {
                continue;
            };
            for (&(x, y), &w) in rule.points.iter().zip(&rule.weights) {
                let s = (2.0 * (x - rect.x0) / rect.width() - 1.0).clamp(-1.0, 1.0);
                let t = (2.0 * (y - rect.y0) / rect.height() - 1.0).clamp(-1.0, 1.0);
                disc.basis.eval(s, t, &mut v, &mut ds, &mut dt);
                let mut gx = 0.0;
                let mut gy = 0.0;
                for a in 0..nd {
                    gx += coeffs[dofs[a]] * ds[a] * jx;
                    gy += coeffs[dofs[a]] * dt[a] * jy;
                }
                acc += w * (gx * gx + gy * gy);
            }
        }
        let (Some(surf), Some(cf)) = (disc.rules[e].surface.as_ref(), disc.rules[e].coeffs)
        else {
            continue;
        };
        let (Some(dn), Some(dp)) = (
            disc.dofmap.element_dofs(&disc.mesh, e, Side::Neg),
            disc.dofmap.element_dofs(&disc.mesh, e, Side::Pos),
        ) else {
            continue;
        };
        for ((&(x, y), &w), &(nx, ny)) in surf.points.iter().zip(&surf.weights).zip(&surf.normals)
        {
            let s = (2.0 * (x - rect.x0) / rect.width() - 1.0).clamp(-1.0, 1.0);
            let t = (2.0 * (y - rect.y0) / rect.height() - 1.0).clamp(-1.0, 1.0);
            disc.basis.eval(s, t, &mut v, &mut ds, &mut dt);
            let mut jump = 0.0;
            let mut wavg = 0.0;
            for a in 0..nd {
                let dnormal = (nx * ds[a] * jx + ny * dt[a] * jy) as f64;
                jump += (coeffs[dp[a]] - coeffs[dn[a]]) * v[a];
                wavg += cf.kappa_plus * disc.alpha[1] * coeffs[dp[a]] * dnormal
                    + cf.kappa_minus * disc.alpha[0] * coeffs[dn[a]] * dnormal;
            }
            acc += w * (h / (p * p) * wavg * wavg + p * p / h * jump * jump);
        }
    }
    acc += ghost.quadratic_form(coeffs, coeffs) / (h * h);
    acc.max(0.0).sqrt()
}

/// Per-index relative eigenvalue errors |λᵢ − λᵢʳᵉᶠ| / λᵢʳᵉᶠ.
pub fn eigenvalue_errors(computed: &[f64], reference: &[f64]) -> Result<Vec<f64>, NormError> {
    if computed.len() != reference.len() {
        return Err(NormError::LengthMismatch(computed.len(), reference.len()));
    }
    Ok(computed
        .iter()
        .zip(reference)
        .map(|(c, r)| (c - r).abs() / r.abs())
        .collect())
}
