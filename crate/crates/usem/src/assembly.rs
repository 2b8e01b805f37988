//! Global operator assembly on the doubled space: weighted Nitsche
//! stiffness, degree-scaled ghost penalty, mass, load vector, the extended
//! stabilized forms, and strong Dirichlet elimination.

use crate::dofmap::DofMap;
use crate::levelset::LevelSet;
use crate::lgl::Basis2D;
use crate::mesh::{CutMesh, ElementClass, Face, Rect, Side};
use crate::quadrature::{
    cut_volume_rule, face_rule, interface_rule, QuadError, SurfaceRule, VolumeRule,
};
use crate::sparse::{SparseError, SparseSymMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("degenerate cut element: both side measures vanish")]
    DegenerateElement,
    #[error(transparent)]
    DimensionMismatch(#[from] SparseError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
    #[error(transparent)]
    Basis(#[from] crate::lgl::LglError),
}

/// Interface weights and penalty for one cut element, from quadrature
/// measures: κ₊ = α₋|K₊| / (α₋|K₊| + α₊|K₋|), κ₋ its complement, and
/// γ = 2 h_K |Γ_K| / (|K₊|/α₊ + |K₋|/α₋).
#[derive(Debug, Clone, Copy)]
pub struct NitscheCoefficients {
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    pub gamma: f64,
    pub area_minus: f64,
    pub area_plus: f64,
    pub interface_length: f64,
}

pub fn compute_nitsche_coeffs(
    area_minus: f64,
    area_plus: f64,
    interface_length: f64,
    alpha: [f64; 2],
    h_k: f64,
) -> Result<NitscheCoefficients, AssemblyError> {
    let [alpha_minus, alpha_plus] = alpha;
    let denom = alpha_minus * area_plus + alpha_plus * area_minus;
    if denom <= 0.0 {
        return Err(AssemblyError::DegenerateElement);
    }
    let kappa_plus = alpha_minus * area_plus / denom;
    let kappa_minus = alpha_plus * area_minus / denom;
    let gamma = 2.0 * h_k * interface_length / (area_plus / alpha_plus + area_minus / alpha_minus);
    Ok(NitscheCoefficients {
        kappa_minus,
        kappa_plus,
        gamma,
        area_minus,
        area_plus,
        interface_length,
    })
}

/// Quadrature rules attached to one element.
#[derive(Debug, Default)]
pub struct ElementRules {
    pub volume: [Option<VolumeRule>; 2],
    pub surface: Option<SurfaceRule>,
    pub coeffs: Option<NitscheCoefficients>,
}

/// Nonhomogeneous interface data: g_D = ⟦u⟧ and g_N = ⟦α ∂ₙu⟧ along Γ,
/// the flux jump evaluated against the Ω₋→Ω₊ unit normal.
pub struct JumpData {
    pub g_d: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub g_n: Box<dyn Fn(f64, f64, (f64, f64)) -> f64 + Send + Sync>,
}

/// A classified mesh with its basis, dof numbering, and per-element cut
/// quadrature, ready for operator assembly.
pub struct Discretization {
    pub mesh: CutMesh,
    pub levelset: LevelSet,
    pub basis: Basis2D,
    pub dofmap: DofMap,
    /// [α₋, α₊].
    pub alpha: [f64; 2],
    /// Gauss points per direction and per 1D segment.
    pub q: usize,
    pub rules: Vec<ElementRules>,
    pub ghost: [Vec<Face>; 2],
}

impl Discretization {
    /// Build rules and numbering for a classified mesh. `q` is the number of
    /// Gauss points per direction on cut cells (p+3 unless overridden).
    pub fn new(
        mesh: CutMesh,
        levelset: LevelSet,
        p: usize,
        alpha: [f64; 2],
        q: Option<usize>,
    ) -> Result<Self, AssemblyError> {
        let q = q.unwrap_or(p + 3);
        let basis = Basis2D::new(p)?;
        let h_k = mesh.h();
        let mut rules = Vec::with_capacity(mesh.num_elements());
        // A cut element belongs to a side submesh only when its cut part has
        // positive measure: corner and edge grazes contribute no dofs.
        let mut activity = Vec::with_capacity(mesh.num_elements());
        for e in 0..mesh.num_elements() {
            let rect = mesh.element_rect(e);
            let class = mesh.class(e);
            let mut er = ElementRules::default();
            match class {
                ElementClass::Neg | ElementClass::Pos => {
                    let side = if class == ElementClass::Neg { Side::Neg } else { Side::Pos };
                    er.volume[side.idx()] =
                        Some(cut_volume_rule(&rect, class, &levelset, side, q)?);
                    activity.push([side == Side::Neg, side == Side::Pos]);
                }
                ElementClass::Cut => {
                    let neg = cut_volume_rule(&rect, class, &levelset, Side::Neg, q)?;
                    let pos = cut_volume_rule(&rect, class, &levelset, Side::Pos, q)?;
                    let surf = interface_rule(&rect, &levelset, q)?;
                    let mut coeffs = compute_nitsche_coeffs(
                        neg.total_weight(),
                        pos.total_weight(),
                        surf.total_weight(),
                        alpha,
                        h_k,
                    )?;
                    let both = !neg.points.is_empty() && !pos.points.is_empty();
                    if both && !surf.points.is_empty() {
                        // Local coercivity guard: the measure-based γ can be
                        // marginal for slivers with a short interface piece
                        // and a full-strength flux from the other side, which
                        // makes the element block (hence the global operator)
                        // indefinite. Doubling γ on the affected element is
                        // consistent for any value and restores positivity.
                        for _ in 0..16 {
                            let local = cut_local_block(
                                &basis, &rect, &neg, &pos, &surf, &coeffs, alpha, p as f64, h_k,
                            );
                            if local_block_psd(&local) {
                                break;
                            }
                            coeffs.gamma *= 2.0;
                        }
                    }
                    er.coeffs = Some(coeffs);
                    activity.push([!neg.points.is_empty(), !pos.points.is_empty()]);
                    er.volume = [Some(neg), Some(pos)];
                    er.surface = Some(surf);
                }
            }
            rules.push(er);
        }
        let dofmap = DofMap::build_with_activity(&mesh, &crate::lgl::lgl_points(p)?, &activity);
        // Ghost faces per side: interior faces of the side's fictitious
        // submesh with at least one interface element.
        let mut ghost: [Vec<Face>; 2] = [Vec::new(), Vec::new()];
        for face in mesh.interior_faces() {
            let cut = mesh.class(face.left) == ElementClass::Cut
                || mesh.class(face.right) == ElementClass::Cut;
            if !cut {
                continue;
            }
            for side in Side::BOTH {
                if activity[face.left][side.idx()] && activity[face.right][side.idx()] {
                    ghost[side.idx()].push(face);
                }
            }
        }
        Ok(Discretization { mesh, levelset, basis, dofmap, alpha, q, rules, ghost })
    }

    pub fn h(&self) -> f64 {
        self.mesh.h()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn ndofs(&self) -> usize {
        self.dofmap.ndofs
    }

    fn reference_point(&self, rect: &Rect, x: f64, y: f64) -> (f64, f64) {
        let s = (2.0 * (x - rect.x0) / rect.width() - 1.0).clamp(-1.0, 1.0);
        let t = (2.0 * (y - rect.y0) / rect.height() - 1.0).clamp(-1.0, 1.0);
        (s, t)
    }
}

fn scatter(
    triplets: &mut Vec<(u32, u32, f64)>,
    rows: &[usize],
    cols: &[usize],
    local: &[f64],
) {
    let nc = cols.len();
    for (a, &ga) in rows.iter().enumerate() {
        for (b, &gb) in cols.iter().enumerate() {
            let v = local[a * nc + b];
            if v != 0.0 {
                triplets.push((ga as u32, gb as u32, v));
            }
        }
    }
}

/// Per-element volume stiffness ∫ α ∇φ_a·∇φ_b over the given rule.
pub fn element_stiffness(
    basis: &Basis2D,
    rect: &Rect,
    rule: &VolumeRule,
    alpha: f64,
) -> Vec<f64> {
    let nd = basis.ndofs();
    let (jx, jy) = (2.0 / rect.width(), 2.0 / rect.height());
    let mut local = vec![0.0; nd * nd];
    let mut v = vec![0.0; nd];
    let mut ds = vec![0.0; nd];
    let mut dt = vec![0.0; nd];
    for (&(x, y), &w) in rule.points.iter().zip(&rule.weights) {
        let s = (2.0 * (x - rect.x0) / rect.width() - 1.0).clamp(-1.0, 1.0);
        let t = (2.0 * (y - rect.y0) / rect.height() - 1.0).clamp(-1.0, 1.0);
        basis.eval(s, t, &mut v, &mut ds, &mut dt);
        for a in 0..nd {
            let (gxa, gya) = (ds[a] * jx, dt[a] * jy);
            for b in a..nd {
                let (gxb, gyb) = (ds[b] * jx, dt[b] * jy);
                let val = w * alpha * (gxa * gxb + gya * gyb);
                local[a * nd + b] += val;
                if a != b {
                    local[b * nd + a] += val;
                }
            }
        }
    }
    local
}

/// Per-element mass ∫ φ_a φ_b over the given rule.
pub fn element_mass(basis: &Basis2D, rect: &Rect, rule: &VolumeRule) -> Vec<f64> {
    let nd = basis.ndofs();
    let mut local = vec![0.0; nd * nd];
    let mut v = vec![0.0; nd];
    let mut ds = vec![0.0; nd];
    let mut dt = vec![0.0; nd];
    for (&(x, y), &w) in rule.points.iter().zip(&rule.weights) {
        let s = (2.0 * (x - rect.x0) / rect.width() - 1.0).clamp(-1.0, 1.0);
        let t = (2.0 * (y - rect.y0) / rect.height() - 1.0).clamp(-1.0, 1.0);
        basis.eval(s, t, &mut v, &mut ds, &mut dt);
        for a in 0..nd {
            for b in a..nd {
                let val = w * v[a] * v[b];
                local[a * nd + b] += val;
                if a != b {
                    local[b * nd + a] += val;
                }
            }
        }
    }
    local
}

/// Combined 2(p+1)² local block of a cut element with both sides active:
/// side volume terms plus the Nitsche coupling and penalty, minus-side dofs
/// first.
fn cut_local_block(
    basis: &Basis2D,
    rect: &Rect,
    neg: &VolumeRule,
    pos: &VolumeRule,
    surf: &SurfaceRule,
    coeffs: &NitscheCoefficients,
    alpha: [f64; 2],
    p: f64,
    h: f64,
) -> Vec<f64> {
    let nd = basis.ndofs();
    let m = 2 * nd;
    let mut local = vec![0.0; m * m];
    for (offset, rule, al) in [(0, neg, alpha[0]), (nd, pos, alpha[1])] {
        let vol = element_stiffness(basis, rect, rule, al);
        for a in 0..nd {
            for b in 0..nd {
                local[(offset + a) * m + (offset + b)] += vol[a * nd + b];
            }
        }
    }
    let mut v = vec![0.0; nd];
    let mut ds = vec![0.0; nd];
    let mut dt = vec![0.0; nd];
    let (jx, jy) = (2.0 / rect.width(), 2.0 / rect.height());
    let mut jump = vec![0.0; m];
    let mut flux = vec![0.0; m];
    let penalty = p * p / h * coeffs.gamma;
    for ((&(x, y), &w), &(nx, ny)) in surf.points.iter().zip(&surf.weights).zip(&surf.normals) {
        let s = (2.0 * (x - rect.x0) / rect.width() - 1.0).clamp(-1.0, 1.0);
        let t = (2.0 * (y - rect.y0) / rect.height() - 1.0).clamp(-1.0, 1.0);
        basis.eval(s, t, &mut v, &mut ds, &mut dt);
        for a in 0..nd {
            let dnormal = nx * ds[a] * jx + ny * dt[a] * jy;
            jump[a] = -v[a];
            flux[a] = coeffs.kappa_minus * alpha[0] * dnormal;
            jump[nd + a] = v[a];
            flux[nd + a] = coeffs.kappa_plus * alpha[1] * dnormal;
        }
        for a in 0..m {
            for b in 0..m {
                local[a * m + b] +=
                    w * (jump[a] * flux[b] + flux[a] * jump[b] + penalty * jump[a] * jump[b]);
            }
        }
    }
    local
}

/// Positive semidefiniteness check of a local block, up to a relative slack.
fn local_block_psd(local: &[f64]) -> bool {
    let m = (local.len() as f64).sqrt() as usize;
    let scale = (0..m).map(|i| local[i * m + i]).fold(0.0f64, f64::max);
    if scale <= 0.0 {
        return true;
    }
    let slack = 1e-10 * scale;
    let d = nalgebra::DMatrix::from_fn(m, m, |i, j| {
        0.5 * (local[i * m + j] + local[j * m + i]) + if i == j { slack } else { 0.0 }
    });
    d.cholesky().is_some()
}

/// The Nitsche bilinear form a_{p,h}: side volume terms, the two symmetric
/// coupling terms ⟨⟦v⟧, {α∂ₙw}⟩ + ⟨{α∂ₙv}, ⟦w⟧⟩, and the interface penalty
/// (p²/h)⟨γ⟦v⟧, ⟦w⟧⟩, with weighted averages {·} = κ₊(·)₊ + κ₋(·)₋ and jumps
/// ⟦·⟧ = (·)₊ − (·)₋.
pub fn assemble_stiffness(disc: &Discretization) -> SparseSymMatrix {
    let p = disc.degree() as f64;
    let h = disc.h();
    let mut triplets = Vec::new();
    for e in 0..disc.mesh.num_elements() {
        let rect = disc.mesh.element_rect(e);
        let dn = disc.dofmap.element_dofs(&disc.mesh, e, Side::Neg);
        let dp = disc.dofmap.element_dofs(&disc.mesh, e, Side::Pos);
        let coupled = match (&dn, &dp, disc.rules[e].surface.as_ref()) {
            (Some(_), Some(_), Some(surf)) => !surf.points.is_empty(),
            _ => false,
        };
        if coupled {
            let (dn, dp) = (dn.unwrap(), dp.unwrap());
            let combined: Vec<usize> = dn.iter().chain(dp.iter()).copied().collect();
            let local = cut_local_block(
                &disc.basis,
                &rect,
                disc.rules[e].volume[0].as_ref().unwrap(),
                disc.rules[e].volume[1].as_ref().unwrap(),
                disc.rules[e].surface.as_ref().unwrap(),
                &disc.rules[e].coeffs.unwrap(),
                disc.alpha,
                p,
                h,
            );
            scatter(&mut triplets, &combined, &combined, &local);
        } else {
            for side in Side::BOTH {
                let (Some(dofs), Some(rule)) = (
                    disc.dofmap.element_dofs(&disc.mesh, e, side),
                    disc.rules[e].volume[side.idx()].as_ref(),
                ) else {
                    continue;
                };
                let local = element_stiffness(&disc.basis, &rect, rule, disc.alpha[side.idx()]);
                scatter(&mut triplets, &dofs, &dofs, &local);
            }
        }
    }
    SparseSymMatrix::from_triplets(disc.ndofs(), triplets)
}

/// Local ghost-penalty block for one face and one side:
/// Σ_{j=0}^{p} h^{2j+1}/p^{2j} ∫_e [∂ₙʲ φ_a][∂ₙʲ φ_b] dl over the combined
/// local dofs (left element first, then right).
pub fn ghost_face_block(basis: &Basis2D, face: &Face, hx: f64, hy: f64, h: f64) -> Vec<f64> {
    let p = basis.degree;
    let n1 = p + 1;
    let nd = basis.ndofs();
    let m = 2 * nd;
    let pf = p as f64;
    let vertical = face.normal == (1.0, 0.0);
    // Normal-direction scale and derivative rows at the two element traces.
    let jn = if vertical { 2.0 / hx } else { 2.0 / hy };
    let jt = if vertical { hy } else { hx };
    let rule = face_rule(face, p + 1);
    let mut local = vec![0.0; m * m];
    let mut tang = vec![0.0; n1];
    let mut end_l = vec![0.0; n1];
    let mut end_r = vec![0.0; n1];
    let mut d = vec![0.0; m];
    for j in 0..=p {
        let coef = h.powi(2 * j as i32 + 1) / pf.powi(2 * j as i32);
        let scale = jn.powi(j as i32);
        // Trace of the j-th normal derivative: left element at its far edge,
        // right element at its near edge.
        basis.lag.endpoint_derivs(j, true, &mut end_l);
        basis.lag.endpoint_derivs(j, false, &mut end_r);
        for (&(x, y), &w) in rule.points.iter().zip(&rule.weights) {
            let tref = if vertical {
                2.0 * (y - (face.a.1.min(face.b.1))) / jt - 1.0
            } else {
                2.0 * (x - (face.a.0.min(face.b.0))) / jt - 1.0
            };
            basis.lag.values(tref.clamp(-1.0, 1.0), &mut tang);
            for k in 0..n1 {
                for i in 0..n1 {
                    let (di, dj) = if vertical { (i, k) } else { (k, i) };
                    let a = dj * n1 + di;
                    d[a] = -end_l[i] * scale * tang[k];
                    d[nd + a] = end_r[i] * scale * tang[k];
                }
            }
            let cw = coef * w;
            for a in 0..m {
                if d[a] == 0.0 {
                    continue;
                }
                for b in a..m {
                    let v = cw * (d[a] * d[b]);
                    local[a * m + b] += v;
                    if b != a {
                        local[b * m + a] += v;
                    }
                }
            }
        }
    }
    local
}

/// Ghost penalty g_{p,h}: face-jump penalties of all normal derivatives up
/// to order p, assembled per side over its ghost-face set. Contributions
/// from G₋ act on V₋ dofs and from G₊ on V₊ dofs.
pub fn assemble_ghost_penalty(disc: &Discretization) -> SparseSymMatrix {
    let h = disc.h();
    let mut triplets = Vec::new();
    for side in Side::BOTH {
        for face in &disc.ghost[side.idx()] {
            let dl = disc.dofmap.element_dofs(&disc.mesh, face.left, side).expect("ghost face");
            let dr = disc.dofmap.element_dofs(&disc.mesh, face.right, side).expect("ghost face");
            let combined: Vec<usize> = dl.iter().chain(dr.iter()).copied().collect();
            let local = ghost_face_block(&disc.basis, face, disc.mesh.hx, disc.mesh.hy, h);
            scatter(&mut triplets, &combined, &combined, &local);
        }
    }
    SparseSymMatrix::from_triplets(disc.ndofs(), triplets)
}

/// Block mass matrix (u, v) with cut-cell volume rules.
pub fn assemble_mass(disc: &Discretization) -> SparseSymMatrix {
    let mut triplets = Vec::new();
    for e in 0..disc.mesh.num_elements() {
        let rect = disc.mesh.element_rect(e);
        for side in Side::BOTH {
            let (Some(dofs), Some(rule)) = (
                disc.dofmap.element_dofs(&disc.mesh, e, side),
                disc.rules[e].volume[side.idx()].as_ref(),
            ) else {
                continue;
            };
            let local = element_mass(&disc.basis, &rect, rule);
            scatter(&mut triplets, &dofs, &dofs, &local);
        }
    }
    SparseSymMatrix::from_triplets(disc.ndofs(), triplets)
}

/// Load vector Σᵢ (fᵢ, vᵢ), plus the consistent Nitsche right-hand side when
/// interface jump data is present:
/// ⟨g_D, {α∂ₙv}⟩ + (p²/h)⟨γ g_D, ⟦v⟧⟩ − ⟨g_N, κ₋v₊ + κ₊v₋⟩.
pub fn assemble_load(
    disc: &Discretization,
    source: &(dyn Fn(f64, f64, Side) -> f64 + Sync),
    jumps: Option<&JumpData>,
) -> Vec<f64> {
    let nd = disc.basis.ndofs();
    let p = disc.degree() as f64;
    let h = disc.h();
    let mut rhs = vec![0.0; disc.ndofs()];
    let mut v = vec![0.0; nd];
    let mut ds = vec![0.0; nd];
    let mut dt = vec![0.0; nd];
    for e in 0..disc.mesh.num_elements() {
        let rect = disc.mesh.element_rect(e);
        for side in Side::BOTH {
            let (Some(dofs), Some(rule)) = (
                disc.dofmap.element_dofs(&disc.mesh, e, side),
                disc.rules[e].volume[side.idx()].as_ref(),
            ) else {
                continue;
            };
            for (&(x, y), &w) in rule.points.iter().zip(&rule.weights) {
                let (s, t) = disc.reference_point(&rect, x, y);
                disc.basis.eval(s, t, &mut v, &mut ds, &mut dt);
                let f = source(x, y, side);
                for a in 0..nd {
                    rhs[dofs[a]] += w * f * v[a];
                }
            }
        }
        let (Some(surf), Some(coeffs), Some(jd)) =
            (disc.rules[e].surface.as_ref(), disc.rules[e].coeffs, jumps)
        else {
            continue;
        };
        if surf.points.is_empty() {
            continue;
        }
        let (Some(dn), Some(dp)) = (
            disc.dofmap.element_dofs(&disc.mesh, e, Side::Neg),
            disc.dofmap.element_dofs(&disc.mesh, e, Side::Pos),
        ) else {
            continue;
        };
        let (jx, jy) = (2.0 / rect.width(), 2.0 / rect.height());
        let penalty = p * p / h * coeffs.gamma;
        for ((&(x, y), &w), &(nx, ny)) in
            surf.points.iter().zip(&surf.weights).zip(&surf.normals)
        {
            let (s, t) = disc.reference_point(&rect, x, y);
            disc.basis.eval(s, t, &mut v, &mut ds, &mut dt);
            let gd = (jd.g_d)(x, y);
            let gn = (jd.g_n)(x, y, (nx, ny));
            for a in 0..nd {
                let dnormal = nx * ds[a] * jx + ny * dt[a] * jy;
                // Minus side: jump trace -v, conjugate weight κ₊.
                rhs[dn[a]] += w
                    * (gd * coeffs.kappa_minus * disc.alpha[0] * dnormal
                        + penalty * gd * (-v[a])
                        - gn * coeffs.kappa_plus * v[a]);
                // Plus side: jump trace +v, conjugate weight κ₋.
                rhs[dp[a]] += w
                    * (gd * coeffs.kappa_plus * disc.alpha[1] * dnormal
                        + penalty * gd * v[a]
                        - gn * coeffs.kappa_minus * v[a]);
            }
        }
    }
    rhs
}

/// A_{p,h} = a + (γ_A/h²) g and M_{p,h} = m + γ_M g.
pub fn build_extended_forms(
    stiffness: &SparseSymMatrix,
    ghost: &SparseSymMatrix,
    mass: &SparseSymMatrix,
    gamma_a: f64,
    gamma_m: f64,
    h: f64,
) -> Result<(SparseSymMatrix, SparseSymMatrix), AssemblyError> {
    let a = stiffness.add_scaled(ghost, gamma_a / (h * h))?;
    let m = mass.add_scaled(ghost, gamma_m)?;
    Ok((a, m))
}

/// Reduced system after eliminating Dirichlet rows and columns.
pub struct ReducedSystem {
    pub matrix: SparseSymMatrix,
    pub rhs: Vec<f64>,
    /// Original indices of the kept (free) dofs.
    pub kept: Vec<usize>,
    pub full_dim: usize,
}

impl ReducedSystem {
    /// Scatter a reduced vector back to the full dof space, zeros on ∂Ω.
    pub fn pad(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.full_dim];
        for (k, &i) in self.kept.iter().enumerate() {
            full[i] = reduced[k];
        }
        full
    }
}

/// Eliminate Dirichlet dofs (homogeneous data), preserving symmetry.
pub fn apply_dirichlet(
    matrix: &SparseSymMatrix,
    rhs: &[f64],
    dofmap: &DofMap,
) -> ReducedSystem {
    let keep = dofmap.free_mask();
    let (reduced, kept) = matrix.restrict(&keep);
    let rhs = kept.iter().map(|&i| rhs[i]).collect();
    ReducedSystem { matrix: reduced, rhs, kept, full_dim: dofmap.ndofs }
}

/// Restrict a matrix alone (e.g. the mass side of the pencil).
pub fn reduce_matrix(matrix: &SparseSymMatrix, dofmap: &DofMap) -> SparseSymMatrix {
    matrix.restrict(&dofmap.free_mask()).0
}
