//! Uniform rectangular background mesh, element classification against a
//! level set, ghost-face sets, and the interface-resolution check.

use crate::levelset::LevelSet;
use thiserror::Error;

/// Samples per element edge when scanning for interface crossings.
pub const EDGE_SAMPLES: usize = 64;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid domain: ({x0}, {x1}) x ({y0}, {y1})")]
    InvalidDomain { x0: f64, x1: f64, y0: f64, y1: f64 },
    #[error("mesh needs at least 2 elements per side, got {0}")]
    TooFewElements(usize),
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

/// Which side of the interface a quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Neg = 0,
    Pos = 1,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Neg, Side::Pos];

    pub fn idx(self) -> usize {
        self as usize
    }

    /// The side a point belongs to; φ = 0 counts as Ω̄₋.
    pub fn of(phi: f64) -> Side {
        if phi <= 0.0 {
            Side::Neg
        } else {
            Side::Pos
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementClass {
    Neg,
    Pos,
    Cut,
}

impl ElementClass {
    /// Membership in the side submesh T_{side,h}: elements whose closure
    /// meets Ω_side, i.e. same-side elements plus every cut element.
    pub fn in_submesh(self, side: Side) -> bool {
        match self {
            ElementClass::Cut => true,
            ElementClass::Neg => side == Side::Neg,
            ElementClass::Pos => side == Side::Pos,
        }
    }
}

/// An interior mesh face shared by two elements, with a fixed orientation:
/// the unit normal points from `left` into `right`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub left: usize,
    pub right: usize,
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub normal: (f64, f64),
}

impl Face {
    pub fn length(&self) -> f64 {
        ((self.b.0 - self.a.0).powi(2) + (self.b.1 - self.a.1).powi(2)).sqrt()
    }
}

/// Uniform N×N rectangular mesh with per-element interface classification.
#[derive(Debug, Clone)]
pub struct CutMesh {
    pub domain: Rect,
    pub n: usize,
    pub hx: f64,
    pub hy: f64,
    /// Row-major: element (ix, iy) at index iy*n + ix.
    pub classes: Vec<ElementClass>,
}

/// Result of the interface-resolution check: every cut element boundary must
/// be crossed exactly twice, each edge at most once.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub ok: bool,
    pub violations: Vec<usize>,
}

pub fn build_mesh(domain: Rect, n: usize) -> Result<CutMesh, MeshError> {
    if !(domain.x1 > domain.x0 && domain.y1 > domain.y0)
        || !domain.x0.is_finite()
        || !domain.x1.is_finite()
        || !domain.y0.is_finite()
        || !domain.y1.is_finite()
    {
        return Err(MeshError::InvalidDomain {
            x0: domain.x0,
            x1: domain.x1,
            y0: domain.y0,
            y1: domain.y1,
        });
    }
    if n < 2 {
        return Err(MeshError::TooFewElements(n));
    }
    Ok(CutMesh {
        domain,
        n,
        hx: domain.width() / n as f64,
        hy: domain.height() / n as f64,
        classes: Vec::new(),
    })
}

impl CutMesh {
    pub fn num_elements(&self) -> usize {
        self.n * self.n
    }

    /// Longest element edge (the mesh size h for uniform square grids).
    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }

    pub fn element_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    pub fn element_coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    pub fn element_rect(&self, idx: usize) -> Rect {
        let (ix, iy) = self.element_coords(idx);
        Rect {
            x0: self.domain.x0 + ix as f64 * self.hx,
            x1: self.domain.x0 + (ix + 1) as f64 * self.hx,
            y0: self.domain.y0 + iy as f64 * self.hy,
            y1: self.domain.y0 + (iy + 1) as f64 * self.hy,
        }
    }

    pub fn class(&self, idx: usize) -> ElementClass {
        self.classes[idx]
    }

    pub fn cut_elements(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_elements()).filter(|&e| self.classes[e] == ElementClass::Cut)
    }

    /// All interior faces in a fixed order: vertical faces first (normal +x),
    /// then horizontal (normal +y).
    pub fn interior_faces(&self) -> Vec<Face> {
        let n = self.n;
        let mut faces = Vec::with_capacity(2 * n * (n - 1));
        for iy in 0..n {
            for ix in 0..n - 1 {
                let left = self.element_index(ix, iy);
                let r = self.element_rect(left);
                faces.push(Face {
                    left,
                    right: self.element_index(ix + 1, iy),
                    a: (r.x1, r.y0),
                    b: (r.x1, r.y1),
                    normal: (1.0, 0.0),
                });
            }
        }
        for iy in 0..n - 1 {
            for ix in 0..n {
                let left = self.element_index(ix, iy);
                let r = self.element_rect(left);
                faces.push(Face {
                    left,
                    right: self.element_index(ix, iy + 1),
                    a: (r.x0, r.y1),
                    b: (r.x1, r.y1),
                    normal: (0.0, 1.0),
                });
            }
        }
        faces
    }
}

/// Scan φ along the closure of an element. Returns (saw strictly negative,
/// saw strictly positive, saw exact zero).
fn scan_element(rect: &Rect, levelset: &LevelSet) -> (bool, bool, bool) {
    let mut neg = false;
    let mut pos = false;
    let mut zero = false;
    let mut look = |v: f64| {
        if v == 0.0 {
            zero = true;
        } else if v < 0.0 {
            neg = true;
        } else {
            pos = true;
        }
    };
    let m = EDGE_SAMPLES;
    for k in 0..=m {
        let fx = rect.x0 + rect.width() * k as f64 / m as f64;
        let fy = rect.y0 + rect.height() * k as f64 / m as f64;
        look(levelset.value(fx, rect.y0));
        look(levelset.value(fx, rect.y1));
        look(levelset.value(rect.x0, fy));
        look(levelset.value(rect.x1, fy));
    }
    let (cx, cy) = rect.center();
    look(levelset.value(cx, cy));
    (neg, pos, zero)
}

/// Classify every element: Cut when the zero set touches its closure
/// (both strict signs seen, or an exact zero anywhere on the scan), else by
/// the sign of φ at the center with φ ≤ 0 counting as Ω̄₋.
pub fn classify_elements(mesh: &CutMesh, levelset: &LevelSet) -> CutMesh {
    let mut out = mesh.clone();
    out.classes = (0..mesh.num_elements())
        .map(|e| {
            let rect = mesh.element_rect(e);
            let (neg, pos, zero) = scan_element(&rect, levelset);
            if (neg && pos) || zero {
                ElementClass::Cut
            } else {
                let (cx, cy) = rect.center();
                match Side::of(levelset.value(cx, cy)) {
                    Side::Neg => ElementClass::Neg,
                    Side::Pos => ElementClass::Pos,
                }
            }
        })
        .collect();
    out
}

/// The ghost-face set G_{side}: faces K∩K' between a cut element K and any
/// element K' of T_{side,h}. Every cut element lies in both submeshes, so
/// both endpoints of a ghost face always carry side dofs.
pub fn ghost_faces(mesh: &CutMesh, side: Side) -> Vec<Face> {
    assert!(!mesh.classes.is_empty(), "mesh must be classified first");
    mesh.interior_faces()
        .into_iter()
        .filter(|f| {
            let cl = mesh.class(f.left);
            let cr = mesh.class(f.right);
            (cl == ElementClass::Cut && cr.in_submesh(side))
                || (cr == ElementClass::Cut && cl.in_submesh(side))
        })
        .collect()
}

/// Count sign transitions of φ along a segment, with φ ≤ 0 counting as
/// negative. Each transition corresponds to at least one interface crossing.
fn edge_crossings(levelset: &LevelSet, a: (f64, f64), b: (f64, f64)) -> usize {
    let mut count = 0;
    let mut prev = Side::of(levelset.value(a.0, a.1));
    for k in 1..=EDGE_SAMPLES {
        let t = k as f64 / EDGE_SAMPLES as f64;
        let x = a.0 + t * (b.0 - a.0);
        let y = a.1 + t * (b.1 - a.1);
        let s = Side::of(levelset.value(x, y));
        if s != prev {
            count += 1;
            prev = s;
        }
    }
    count
}

/// Check that the interface crosses each cut-element boundary exactly twice
/// and each edge at most once. Violations are reported, never auto-fixed.
pub fn check_interface_assumption(mesh: &CutMesh, levelset: &LevelSet) -> AssumptionReport {
    assert!(!mesh.classes.is_empty(), "mesh must be classified first");
    let mut violations = Vec::new();
    for e in mesh.cut_elements() {
        let r = mesh.element_rect(e);
        let edges = [
            ((r.x0, r.y0), (r.x1, r.y0)),
            ((r.x1, r.y0), (r.x1, r.y1)),
            ((r.x1, r.y1), (r.x0, r.y1)),
            ((r.x0, r.y1), (r.x0, r.y0)),
        ];
        let counts: Vec<usize> =
            edges.iter().map(|&(a, b)| edge_crossings(levelset, a, b)).collect();
        let total: usize = counts.iter().sum();
        let per_edge_ok = counts.iter().all(|&c| c <= 1);
        // Zero-measure touches (interface grazing a corner or running along
        // an edge) produce no transitions at all; they integrate fine.
        let ok = (total == 2 && per_edge_ok) || total == 0;
        if !ok {
            violations.push(e);
        }
    }
    AssumptionReport { ok: violations.is_empty(), violations }
}
