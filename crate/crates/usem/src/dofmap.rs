//! Global numbering of the doubled spectral element space V₊ ⊕ V₋.
//!
//! Each side space lives on its fictitious submesh (same-side elements plus
//! every cut element) and is C⁰ there: LGL nodes on shared faces map to a
//! single global index per side. Interface elements carry two full index
//! sets, one per side. The global lattice has N·p+1 node lines per
//! direction, so a lattice point is identified by (side, gi, gj).

use crate::lgl::NodeSet1D;
use crate::mesh::{CutMesh, Side};

pub const NO_DOF: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct DofMap {
    pub p: usize,
    pub n_elems_per_side: usize,
    /// Lattice width N·p + 1.
    pub lattice: usize,
    /// Per side, lattice-point → global dof id (NO_DOF for inactive).
    node_ids: [Vec<u32>; 2],
    /// Total dimension of V₊ ⊕ V₋.
    pub ndofs: usize,
    /// Dofs on ∂Ω, eliminated for the homogeneous Dirichlet space.
    pub dirichlet: Vec<bool>,
    /// Physical coordinates of each dof's lattice node.
    pub coords: Vec<(f64, f64)>,
    /// Which side space each dof belongs to.
    pub sides: Vec<Side>,
    /// Per-element side membership used for the numbering.
    activity: Vec<[bool; 2]>,
}

impl DofMap {
    /// Number the active lattice nodes of both side spaces with membership
    /// derived from element classes (every cut element counts for both
    /// sides). The mesh must be classified.
    pub fn build(mesh: &CutMesh, nodes: &NodeSet1D) -> Self {
        let activity: Vec<[bool; 2]> = mesh
            .classes
            .iter()
            .map(|c| [c.in_submesh(Side::Neg), c.in_submesh(Side::Pos)])
            .collect();
        Self::build_with_activity(mesh, nodes, &activity)
    }

    /// Number the active lattice nodes given explicit per-element side
    /// membership. The side submeshes T_{±,h} contain the elements whose
    /// intersection with the open subdomain has positive measure, so a cut
    /// element whose cut part degenerates to a corner or edge carries no
    /// dofs for that side. Numbering order is side-major then lattice
    /// row-major, hence deterministic.
    pub fn build_with_activity(
        mesh: &CutMesh,
        nodes: &NodeSet1D,
        activity: &[[bool; 2]],
    ) -> Self {
        let p = nodes.degree;
        let n = mesh.n;
        let lattice = n * p + 1;
        let mut node_ids = [vec![NO_DOF; lattice * lattice], vec![NO_DOF; lattice * lattice]];
        for side in Side::BOTH {
            let ids = &mut node_ids[side.idx()];
            for e in 0..mesh.num_elements() {
                if !activity[e][side.idx()] {
                    continue;
                }
                let (ex, ey) = mesh.element_coords(e);
                for j in 0..=p {
                    for i in 0..=p {
                        ids[(ey * p + j) * lattice + (ex * p + i)] = 0;
                    }
                }
            }
        }
        let mut ndofs = 0usize;
        let mut coords = Vec::new();
        let mut dirichlet = Vec::new();
        let mut sides = Vec::new();
        for side in Side::BOTH {
            let ids = &mut node_ids[side.idx()];
            for gj in 0..lattice {
                for gi in 0..lattice {
                    let slot = &mut ids[gj * lattice + gi];
                    if *slot != NO_DOF {
                        *slot = ndofs as u32;
                        ndofs += 1;
                        coords.push(lattice_coords(mesh, nodes, gi, gj));
                        sides.push(side);
                        dirichlet.push(
                            gi == 0 || gi == lattice - 1 || gj == 0 || gj == lattice - 1,
                        );
                    }
                }
            }
        }
        DofMap {
            p,
            n_elems_per_side: n,
            lattice,
            node_ids,
            ndofs,
            dirichlet,
            coords,
            sides,
            activity: activity.to_vec(),
        }
    }

    pub fn node_id(&self, side: Side, gi: usize, gj: usize) -> Option<usize> {
        let id = self.node_ids[side.idx()][gj * self.lattice + gi];
        (id != NO_DOF).then_some(id as usize)
    }

    /// Global dof ids of an element's (p+1)² local nodes for one side, in
    /// tensor order j*(p+1)+i, or None when the element has no dofs on that
    /// side.
    pub fn element_dofs(&self, mesh: &CutMesh, elem: usize, side: Side) -> Option<Vec<usize>> {
        if !self.activity[elem][side.idx()] {
            return None;
        }
        let p = self.p;
        let (ex, ey) = mesh.element_coords(elem);
        let mut out = Vec::with_capacity((p + 1) * (p + 1));
        for j in 0..=p {
            for i in 0..=p {
                let id = self.node_ids[side.idx()][(ey * p + j) * self.lattice + (ex * p + i)];
                debug_assert_ne!(id, NO_DOF);
                out.push(id as usize);
            }
        }
        Some(out)
    }

    pub fn num_free(&self) -> usize {
        self.dirichlet.iter().filter(|d| !**d).count()
    }

    /// Mask of interior (non-Dirichlet) dofs.
    pub fn free_mask(&self) -> Vec<bool> {
        self.dirichlet.iter().map(|d| !d).collect()
    }
}

fn lattice_coords(mesh: &CutMesh, nodes: &NodeSet1D, gi: usize, gj: usize) -> (f64, f64) {
    let p = nodes.degree;
    let pick = |g: usize, origin: f64, hstep: f64| {
        // Element-boundary lattice lines get exact element coordinates.
        let (e, i) = if g == mesh.n * p { (mesh.n - 1, p) } else { (g / p, g % p) };
        origin + e as f64 * hstep + 0.5 * (nodes.nodes[i] + 1.0) * hstep
    };
    (pick(gi, mesh.domain.x0, mesh.hx), pick(gj, mesh.domain.y0, mesh.hy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::LevelSet;
    use crate::lgl::lgl_points;
    use crate::mesh::{build_mesh, classify_elements, ElementClass, Rect};

    #[test]
    fn single_side_dimension() {
        let mesh = build_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), 4).unwrap();
        let mesh = classify_elements(&mesh, &LevelSet::constant(-1.0));
        let nodes = lgl_points(3).unwrap();
        let dm = DofMap::build(&mesh, &nodes);
        let lat = 4 * 3 + 1;
        assert_eq!(dm.ndofs, lat * lat);
        assert_eq!(dm.num_free(), (lat - 2) * (lat - 2));
    }

    #[test]
    fn doubled_space_dimension_splits_by_side() {
        let ls = LevelSet::circle(0.0, 0.0, 0.5);
        let mesh = build_mesh(Rect::new(-1.0, 1.0, -1.0, 1.0), 8).unwrap();
        let mesh = classify_elements(&mesh, &ls);
        let nodes = lgl_points(2).unwrap();
        let dm = DofMap::build(&mesh, &nodes);
        // dim V_side = number of lattice nodes covered by T_{side,h}.
        let p = 2;
        let lat = 8 * p + 1;
        let mut expect = 0;
        for side in Side::BOTH {
            let mut marked = vec![false; lat * lat];
            for e in 0..mesh.num_elements() {
                if mesh.class(e).in_submesh(side) {
                    let (ex, ey) = mesh.element_coords(e);
                    for j in 0..=p {
                        for i in 0..=p {
                            marked[(ey * p + j) * lat + (ex * p + i)] = true;
                        }
                    }
                }
            }
            expect += marked.iter().filter(|m| **m).count();
        }
        assert_eq!(dm.ndofs, expect);
        assert!(dm.ndofs > lat * lat);
    }

    #[test]
    fn shared_face_nodes_conform() {
        let ls = LevelSet::circle(0.0, 0.0, 0.5);
        let mesh = build_mesh(Rect::new(-1.0, 1.0, -1.0, 1.0), 4).unwrap();
        let mesh = classify_elements(&mesh, &ls);
        let nodes = lgl_points(3).unwrap();
        let dm = DofMap::build(&mesh, &nodes);
        let p = 3;
        for f in mesh.interior_faces() {
            for side in Side::BOTH {
                let (Some(dl), Some(dr)) = (
                    dm.element_dofs(&mesh, f.left, side),
                    dm.element_dofs(&mesh, f.right, side),
                ) else {
                    continue;
                };
                if f.normal == (1.0, 0.0) {
                    for j in 0..=p {
                        assert_eq!(dl[j * (p + 1) + p], dr[j * (p + 1)]);
                    }
                } else {
                    for i in 0..=p {
                        assert_eq!(dl[p * (p + 1) + i], dr[i]);
                    }
                }
            }
        }
    }

    #[test]
    fn cut_elements_carry_two_index_sets() {
        let ls = LevelSet::circle(0.0, 0.0, 0.5);
        let mesh = build_mesh(Rect::new(-1.0, 1.0, -1.0, 1.0), 4).unwrap();
        let mesh = classify_elements(&mesh, &ls);
        let nodes = lgl_points(2).unwrap();
        let dm = DofMap::build(&mesh, &nodes);
        for e in 0..mesh.num_elements() {
            let dn = dm.element_dofs(&mesh, e, Side::Neg);
            let dp = dm.element_dofs(&mesh, e, Side::Pos);
            match mesh.class(e) {
                ElementClass::Cut => {
                    let (dn, dp) = (dn.unwrap(), dp.unwrap());
                    assert!(dn.iter().all(|a| !dp.contains(a)));
                }
                ElementClass::Neg => {
                    assert!(dn.is_some() && dp.is_none());
                }
                ElementClass::Pos => {
                    assert!(dn.is_none() && dp.is_some());
                }
            }
        }
    }

    #[test]
    fn coordinates_reproduce_lgl_grid() {
        let mesh = build_mesh(Rect::new(0.0, 2.0, 0.0, 2.0), 2).unwrap();
        let mesh = classify_elements(&mesh, &LevelSet::constant(-1.0));
        let nodes = lgl_points(2).unwrap();
        let dm = DofMap::build(&mesh, &nodes);
        let id = dm.node_id(Side::Neg, 1, 0).unwrap();
        // First interior LGL node of the first element: midpoint of [0,1].
        assert!((dm.coords[id].0 - 0.5).abs() < 1e-15);
        assert_eq!(dm.coords[id].1, 0.0);
        let id = dm.node_id(Side::Neg, 2, 2).unwrap();
        assert_eq!(dm.coords[id], (1.0, 1.0));
    }
}
