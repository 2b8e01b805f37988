//! High-order quadrature on implicitly defined regions.
//!
//! Cut elements are decomposed into columns along a height direction chosen
//! from the dominant level-set gradient component at the element center. The
//! column base interval is partitioned at the interface crossings of the two
//! base-parallel edges; within a cut column the interface height is located
//! by Ridder's method at each base Gauss point, and 1D Gauss rules are placed
//! on the two height segments. Surface rules reuse the base points with the
//! measure correction |∇φ|/|∂_height φ|.

use crate::levelset::LevelSet;
use crate::lgl::gauss_legendre;
use crate::mesh::{ElementClass, Face, Rect, Side};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("no sign change on the bracket [{a}, {b}]")]
    NoSignChange { a: f64, b: f64 },
    #[error("root iteration failed to converge")]
    NonConvergence,
    #[error("interface is not a height graph over element column [{b0}, {b1}]")]
    GraphConditionViolated { b0: f64, b1: f64 },
}

/// Volume rule in physical coordinates; weights carry the area measure.
#[derive(Debug, Clone, Default)]
pub struct VolumeRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl VolumeRule {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&(x, y), &w)| w * f(x, y))
            .sum()
    }
}

/// Interface rule; weights carry arc length, normals point from Ω₋ to Ω₊.
#[derive(Debug, Clone, Default)]
pub struct SurfaceRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub normals: Vec<(f64, f64)>,
}

impl SurfaceRule {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// 1D rule mapped onto a mesh face segment.
#[derive(Debug, Clone)]
pub struct FaceRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

/// Ridder's bracketing root finder.
///
/// Requires f(a)·f(b) ≤ 0; an exact zero at either end is returned directly.
/// Stops when |f| falls below 1e-14 times the bracket's f-scale or when the
/// bracket width drops below `tol`.
pub fn ridder_root(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<f64, QuadError> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(QuadError::NoSignChange { a, b });
    }
    let fscale = fa.abs().max(fb.abs());
    // The requested width can undershoot representable spacing; stop once
    // the bracket reaches a few ulps.
    let tol = tol.max(4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1e-300));
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        let s = (fm * fm - fa * fb).sqrt();
        if s == 0.0 {
            return Ok(m);
        }
        let sign = if fa < fb { -1.0 } else { 1.0 };
        let x = m + (m - a) * sign * fm / s;
        let fx = f(x);
        if fx == 0.0 || fx.abs() < 1e-14 * fscale {
            return Ok(x);
        }
        // Re-bracket with the tightest pair among {a, m, x, b}.
        if fm.signum() != fx.signum() {
            if m < x {
                a = m;
                fa = fm;
                b = x;
                fb = fx;
            } else {
                a = x;
                fa = fx;
                b = m;
                fb = fm;
            }
        } else if fa.signum() != fx.signum() {
            b = x;
            fb = fx;
        } else {
            a = x;
            fa = fx;
        }
        if (b - a).abs() < tol {
            return Ok(0.5 * (a + b));
        }
    }
    Err(QuadError::NonConvergence)
}

/// Plain tensor Gauss rule of q points per direction on a rectangle.
pub fn tensor_rule(rect: &Rect, q: usize) -> VolumeRule {
    let g = gauss_legendre(q).expect("Gauss rule");
    let (jx, jy) = (0.5 * rect.width(), 0.5 * rect.height());
    let (cx, cy) = rect.center();
    let mut rule = VolumeRule::default();
    for (ty, wy) in g.nodes.iter().zip(&g.weights) {
        for (tx, wx) in g.nodes.iter().zip(&g.weights) {
            rule.points.push((cx + jx * tx, cy + jy * ty));
            rule.weights.push(wx * wy * jx * jy);
        }
    }
    rule
}

/// Orientation of the column decomposition of a cut element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HeightAxis {
    X,
    Y,
}

/// Cells nest at most this deep before the graph condition is declared
/// unsatisfiable.
const MAX_SUBDIVISION: usize = 8;

/// Minimum |∂ₕφ|/|∇φ| near the interface for a height axis to qualify; keeps
/// the surface measure correction |∇φ|/|∂ₕφ| below 1/HEIGHT_CONE.
const HEIGHT_CONE: f64 = 0.4;

/// Pick a height axis whose gradient component is sign-uniform and bounded
/// away from zero on the near-interface part of the cell, preferring the
/// direction dominant at the center (ties to x). None means the interface
/// bends too much for a single-direction graph on this cell.
fn graph_axis(rect: &Rect, ls: &LevelSet) -> Option<HeightAxis> {
    const M: usize = 5;
    let diag = (rect.width().powi(2) + rect.height().powi(2)).sqrt();
    let (cx, cy) = rect.center();
    let (gcx, gcy) = ls.gradient(cx, cy);
    let prefer = if gcx.abs() >= gcy.abs() { HeightAxis::X } else { HeightAxis::Y };
    let mut ok = [true, true];
    let mut sign = [0.0f64, 0.0f64];
    for j in 0..=M {
        for i in 0..=M {
            let x = rect.x0 + rect.width() * i as f64 / M as f64;
            let y = rect.y0 + rect.height() * j as f64 / M as f64;
            let v = ls.value(x, y);
            let (gx, gy) = ls.gradient(x, y);
            let norm = (gx * gx + gy * gy).sqrt();
            if norm == 0.0 || v.abs() > diag * norm {
                continue;
            }
            for (axis, g) in [(0, gx), (1, gy)] {
                if g.abs() < HEIGHT_CONE * norm {
                    ok[axis] = false;
                } else if sign[axis] == 0.0 {
                    sign[axis] = g.signum();
                } else if sign[axis] != g.signum() {
                    ok[axis] = false;
                }
            }
        }
    }
    let want = [HeightAxis::X, HeightAxis::Y];
    if ok[if prefer == HeightAxis::X { 0 } else { 1 }] {
        Some(prefer)
    } else {
        want.into_iter().find(|a| ok[if *a == HeightAxis::X { 0 } else { 1 }])
    }
}

/// Does the zero set touch the closure of this cell? Edge-scan test with
/// exact zeros counting as contact (matching element classification).
fn subcell_is_cut(rect: &Rect, ls: &LevelSet) -> bool {
    const SCAN: usize = 16;
    let mut neg = false;
    let mut pos = false;
    for k in 0..=SCAN {
        let t = k as f64 / SCAN as f64;
        for (x, y) in [
            (rect.x0 + t * rect.width(), rect.y0),
            (rect.x0 + t * rect.width(), rect.y1),
            (rect.x0, rect.y0 + t * rect.height()),
            (rect.x1, rect.y0 + t * rect.height()),
        ] {
            let v = ls.value(x, y);
            if v == 0.0 {
                return true;
            }
            if v < 0.0 {
                neg = true;
            } else {
                pos = true;
            }
            if neg && pos {
                return true;
            }
        }
    }
    false
}

fn quarters(rect: &Rect) -> [Rect; 4] {
    let (cx, cy) = rect.center();
    [
        Rect::new(rect.x0, cx, rect.y0, cy),
        Rect::new(cx, rect.x1, rect.y0, cy),
        Rect::new(rect.x0, cx, cy, rect.y1),
        Rect::new(cx, rect.x1, cy, rect.y1),
    ]
}

struct Decomposition {
    axis: HeightAxis,
    /// Base interval endpoints including interface crossings, ascending.
    cuts: Vec<f64>,
    base: (f64, f64),
    height: (f64, f64),
}

fn to_xy(axis: HeightAxis, b: f64, t: f64) -> (f64, f64) {
    match axis {
        // Height along x: base coordinate is y.
        HeightAxis::X => (t, b),
        HeightAxis::Y => (b, t),
    }
}

/// Interface crossings of φ along the segment from `a` to `b`, located by a
/// sign scan and Ridder polish.
fn segment_roots(ls: &LevelSet, a: (f64, f64), b: (f64, f64), out: &mut Vec<f64>) {
    const SCAN: usize = 64;
    let eval = |t: f64| ls.value(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
    let mut prev = eval(0.0);
    for k in 1..=SCAN {
        let t1 = k as f64 / SCAN as f64;
        let cur = eval(t1);
        if prev == 0.0 {
            out.push((k - 1) as f64 / SCAN as f64);
        } else if cur != 0.0 && prev.signum() != cur.signum() {
            let t0 = (k - 1) as f64 / SCAN as f64;
            let r = ridder_root(eval, t0, t1, 1e-14).expect("bracketed root");
            out.push(r);
        }
        prev = cur;
    }
    if prev == 0.0 {
        out.push(1.0);
    }
}

fn decompose(rect: &Rect, ls: &LevelSet, axis: HeightAxis) -> Decomposition {
    let (base, height) = match axis {
        HeightAxis::X => ((rect.y0, rect.y1), (rect.x0, rect.x1)),
        HeightAxis::Y => ((rect.x0, rect.x1), (rect.y0, rect.y1)),
    };
    let mut ts = Vec::new();
    segment_roots(ls, to_xy(axis, base.0, height.0), to_xy(axis, base.1, height.0), &mut ts);
    segment_roots(ls, to_xy(axis, base.0, height.1), to_xy(axis, base.1, height.1), &mut ts);
    let mut cuts: Vec<f64> = ts.iter().map(|t| base.0 + t * (base.1 - base.0)).collect();
    cuts.push(base.0);
    cuts.push(base.1);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let eps = 1e-13 * (base.1 - base.0);
    cuts.dedup_by(|a, b| (*a - *b).abs() < eps);
    Decomposition { axis, cuts, base, height }
}

/// Locate the single interface height in a column at base coordinate `b`.
/// Returns None when the column slice does not cross the interface; errors
/// when more than one crossing is present.
fn column_height(
    ls: &LevelSet,
    axis: HeightAxis,
    b: f64,
    height: (f64, f64),
    scan: usize,
) -> Result<Option<f64>, QuadError> {
    let f = |t: f64| {
        let (x, y) = to_xy(axis, b, t);
        ls.value(x, y)
    };
    let mut brackets = Vec::new();
    let mut prev_t = height.0;
    let mut prev = f(prev_t);
    for k in 1..=scan {
        let t = height.0 + (height.1 - height.0) * k as f64 / scan as f64;
        let cur = f(t);
        if prev == 0.0 || (cur != 0.0 && prev.signum() != cur.signum()) {
            brackets.push((prev_t, t));
        }
        prev_t = t;
        prev = cur;
    }
    if prev == 0.0 {
        brackets.push((prev_t, height.1));
    }
    match brackets.len() {
        0 => Ok(None),
        1 => {
            let (t0, t1) = brackets[0];
            let tol = 1e-14 * (height.1 - height.0);
            Ok(Some(ridder_root(f, t0, t1, tol)?))
        }
        _ => Err(QuadError::GraphConditionViolated { b0: height.0, b1: height.1 }),
    }
}

fn push_segment(
    rule: &mut VolumeRule,
    g_nodes: &[f64],
    g_weights: &[f64],
    axis: HeightAxis,
    b: f64,
    wb: f64,
    t0: f64,
    t1: f64,
) {
    let j = 0.5 * (t1 - t0);
    let c = 0.5 * (t0 + t1);
    for (tn, tw) in g_nodes.iter().zip(g_weights) {
        rule.points.push(to_xy(axis, b, c + j * tn));
        rule.weights.push(wb * tw * j);
    }
}

/// Volume rule on the part of an element lying on `side` of the interface.
///
/// Uncut elements get a plain tensor rule when their class matches the
/// requested side and an empty rule otherwise. Cut elements are decomposed
/// into columns along a height axis with a uniform gradient cone; cells
/// where no axis qualifies (the interface bends too sharply) are split into
/// quarters and retried, so coarse meshes still resolve lobed interfaces.
/// q Gauss points are used per direction and per 1D segment.
pub fn cut_volume_rule(
    rect: &Rect,
    class: ElementClass,
    ls: &LevelSet,
    side: Side,
    q: usize,
) -> Result<VolumeRule, QuadError> {
    match class {
        ElementClass::Neg => {
            return Ok(if side == Side::Neg { tensor_rule(rect, q) } else { VolumeRule::default() })
        }
        ElementClass::Pos => {
            return Ok(if side == Side::Pos { tensor_rule(rect, q) } else { VolumeRule::default() })
        }
        ElementClass::Cut => {}
    }
    let g = gauss_legendre(q).expect("Gauss rule");
    let mut rule = VolumeRule::default();
    volume_recursive(rect, ls, side, q, &g, 0, &mut rule)?;
    Ok(rule)
}

fn volume_recursive(
    rect: &Rect,
    ls: &LevelSet,
    side: Side,
    q: usize,
    g: &crate::lgl::QuadRule1D,
    depth: usize,
    rule: &mut VolumeRule,
) -> Result<(), QuadError> {
    if depth > 0 && !subcell_is_cut(rect, ls) {
        let (cx, cy) = rect.center();
        if Side::of(ls.value(cx, cy)) == side {
            let t = tensor_rule(rect, q);
            rule.points.extend(t.points);
            rule.weights.extend(t.weights);
        }
        return Ok(());
    }
    let axis = match graph_axis(rect, ls) {
        Some(axis) => axis,
        None if depth < MAX_SUBDIVISION => {
            for sub in quarters(rect) {
                volume_recursive(&sub, ls, side, q, g, depth + 1, rule)?;
            }
            return Ok(());
        }
        None => return Err(QuadError::GraphConditionViolated { b0: rect.x0, b1: rect.x1 }),
    };
    let dec = decompose(rect, ls, axis);
    let scan = q.max(8);
    for col in dec.cuts.windows(2) {
        let (b0, b1) = (col[0], col[1]);
        if b1 - b0 < 1e-14 * (dec.base.1 - dec.base.0) {
            continue;
        }
        let bm = 0.5 * (b0 + b1);
        let (hx, hy) = to_xy(dec.axis, bm, dec.height.0);
        let lo_side = Side::of(ls.value(hx, hy));
        let (hx, hy) = to_xy(dec.axis, bm, dec.height.1);
        let hi_side = Side::of(ls.value(hx, hy));
        if lo_side == hi_side {
            // Uncut column: tensor rule assigned by the sign at its center.
            let (cx, cy) = to_xy(dec.axis, bm, 0.5 * (dec.height.0 + dec.height.1));
            if Side::of(ls.value(cx, cy)) == side {
                let sub = match dec.axis {
                    HeightAxis::X => Rect::new(dec.height.0, dec.height.1, b0, b1),
                    HeightAxis::Y => Rect::new(b0, b1, dec.height.0, dec.height.1),
                };
                let t = tensor_rule(&sub, q);
                rule.points.extend(t.points);
                rule.weights.extend(t.weights);
            }
            continue;
        }
        let jb = 0.5 * (b1 - b0);
        let cb = 0.5 * (b0 + b1);
        for (bn, bw) in g.nodes.iter().zip(&g.weights) {
            let b = cb + jb * bn;
            let wb = bw * jb;
            match column_height(ls, dec.axis, b, dec.height, scan)? {
                Some(s) => {
                    for (t0, t1) in [(dec.height.0, s), (s, dec.height.1)] {
                        if t1 - t0 <= 0.0 {
                            continue;
                        }
                        let (mx, my) = to_xy(dec.axis, b, 0.5 * (t0 + t1));
                        if Side::of(ls.value(mx, my)) == side {
                            push_segment(
                                rule, &g.nodes, &g.weights, dec.axis, b, wb, t0, t1,
                            );
                        }
                    }
                }
                None => {
                    // Tangency slipped between scan points; the whole height
                    // lies on one side.
                    let (mx, my) = to_xy(dec.axis, b, 0.5 * (dec.height.0 + dec.height.1));
                    if Side::of(ls.value(mx, my)) == side {
                        push_segment(
                            rule,
                            &g.nodes,
                            &g.weights,
                            dec.axis,
                            b,
                            wb,
                            dec.height.0,
                            dec.height.1,
                        );
                    }
                }
            }
        }
    }
    Ok(())
}

/// Arc-length rule on Γ ∩ K for a cut element, with unit normals ∇φ/|∇φ|.
/// Uses the same column decomposition and cone-driven subdivision as the
/// volume rules.
pub fn interface_rule(rect: &Rect, ls: &LevelSet, q: usize) -> Result<SurfaceRule, QuadError> {
    let g = gauss_legendre(q).expect("Gauss rule");
    let mut rule = SurfaceRule::default();
    surface_recursive(rect, ls, q, &g, 0, &mut rule)?;
    Ok(rule)
}

fn surface_recursive(
    rect: &Rect,
    ls: &LevelSet,
    q: usize,
    g: &crate::lgl::QuadRule1D,
    depth: usize,
    rule: &mut SurfaceRule,
) -> Result<(), QuadError> {
    if depth > 0 && !subcell_is_cut(rect, ls) {
        return Ok(());
    }
    let axis = match graph_axis(rect, ls) {
        Some(axis) => axis,
        None if depth < MAX_SUBDIVISION => {
            for sub in quarters(rect) {
                surface_recursive(&sub, ls, q, g, depth + 1, rule)?;
            }
            return Ok(());
        }
        None => return Err(QuadError::GraphConditionViolated { b0: rect.x0, b1: rect.x1 }),
    };
    let dec = decompose(rect, ls, axis);
    let scan = q.max(8);
    for col in dec.cuts.windows(2) {
        let (b0, b1) = (col[0], col[1]);
        if b1 - b0 < 1e-14 * (dec.base.1 - dec.base.0) {
            continue;
        }
        let bm = 0.5 * (b0 + b1);
        let (hx, hy) = to_xy(dec.axis, bm, dec.height.0);
        let lo_side = Side::of(ls.value(hx, hy));
        let (hx, hy) = to_xy(dec.axis, bm, dec.height.1);
        let hi_side = Side::of(ls.value(hx, hy));
        if lo_side == hi_side {
            continue;
        }
        let jb = 0.5 * (b1 - b0);
        let cb = 0.5 * (b0 + b1);
        for (bn, bw) in g.nodes.iter().zip(&g.weights) {
            let b = cb + jb * bn;
            if let Some(s) = column_height(ls, dec.axis, b, dec.height, scan)? {
                let (x, y) = to_xy(dec.axis, b, s);
                let (gx, gy) = ls.gradient(x, y);
                let norm = (gx * gx + gy * gy).sqrt();
                let dh = match dec.axis {
                    HeightAxis::X => gx.abs(),
                    HeightAxis::Y => gy.abs(),
                };
                rule.points.push((x, y));
                rule.weights.push(bw * jb * norm / dh);
                rule.normals.push((gx / norm, gy / norm));
            }
        }
    }
    Ok(())
}

/// q-point Gauss rule on a face segment, weights in arc length.
pub fn face_rule(face: &Face, q: usize) -> FaceRule {
    let g = gauss_legendre(q).expect("Gauss rule");
    let len = face.length();
    let mut rule = FaceRule { points: Vec::with_capacity(q), weights: Vec::with_capacity(q) };
    for (tn, tw) in g.nodes.iter().zip(&g.weights) {
        let t = 0.5 * (tn + 1.0);
        rule.points.push((
            face.a.0 + t * (face.b.0 - face.a.0),
            face.a.1 + t * (face.b.1 - face.a.1),
        ));
        rule.weights.push(0.5 * len * tw);
    }
    rule
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, classify_elements};

    #[test]
    fn ridder_linear_and_trig() {
        let r = ridder_root(|x| x - 0.3, 0.0, 1.0, 1e-15).unwrap();
        assert!((r - 0.3).abs() < 1e-14);
        let r = ridder_root(|x| x.cos(), 1.0, 2.0, 1e-15).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(matches!(
            ridder_root(|x| x * x + 1.0, 0.0, 1.0, 1e-15),
            Err(QuadError::NoSignChange { .. })
        ));
    }

    #[test]
    fn uncut_element_tensor_rule() {
        let rect = Rect::new(0.0, 0.5, 0.0, 0.5);
        let ls = LevelSet::constant(-1.0);
        let rule = cut_volume_rule(&rect, ElementClass::Neg, &ls, Side::Neg, 4).unwrap();
        assert_eq!(rule.points.len(), 16);
        assert!((rule.total_weight() - 0.25).abs() < 1e-14);
        let empty = cut_volume_rule(&rect, ElementClass::Neg, &ls, Side::Pos, 4).unwrap();
        assert!(empty.points.is_empty());
    }

    #[test]
    fn half_plane_splits_area_exactly() {
        let rect = Rect::new(-1.0, 1.0, -1.0, 1.0);
        let ls = LevelSet::half_plane(1.0, 0.0, 0.0);
        let neg = cut_volume_rule(&rect, ElementClass::Cut, &ls, Side::Neg, 6).unwrap();
        assert!((neg.total_weight() - 2.0).abs() < 1e-13);
        let pos = cut_volume_rule(&rect, ElementClass::Cut, &ls, Side::Pos, 6).unwrap();
        assert!((pos.total_weight() - 2.0).abs() < 1e-13);
        for &(x, _) in &neg.points {
            assert!(x < 0.0);
        }
    }

    #[test]
    fn disk_area_and_perimeter() {
        let ls = LevelSet::circle(0.0, 0.0, 0.5);
        let mesh = build_mesh(Rect::new(-1.0, 1.0, -1.0, 1.0), 16).unwrap();
        let mesh = classify_elements(&mesh, &ls);
        let mut area = 0.0;
        let mut perimeter = 0.0;
        let mut partition_err: f64 = 0.0;
        for e in 0..mesh.num_elements() {
            let rect = mesh.element_rect(e);
            let class = mesh.class(e);
            let neg = cut_volume_rule(&rect, class, &ls, Side::Neg, 10).unwrap();
            area += neg.total_weight();
            if class == ElementClass::Cut {
                let pos = cut_volume_rule(&rect, class, &ls, Side::Pos, 10).unwrap();
                partition_err = partition_err
                    .max((neg.total_weight() + pos.total_weight() - rect.area()).abs());
                perimeter += interface_rule(&rect, &ls, 10).unwrap().total_weight();
                for &(x, y) in &neg.points {
                    assert!(ls.value(x, y) <= 0.0);
                }
                for &(x, y) in &pos.points {
                    assert!(ls.value(x, y) > 0.0);
                }
            }
        }
        let exact_area = std::f64::consts::PI * 0.25;
        assert!((area - exact_area).abs() < 1e-10, "area error {}", (area - exact_area).abs());
        let exact_per = std::f64::consts::PI;
        assert!(
            (perimeter - exact_per).abs() < 1e-10,
            "perimeter error {}",
            (perimeter - exact_per).abs()
        );
        assert!(partition_err < 1e-12);
    }

    #[test]
    fn straight_interface_surface_rule() {
        let rect = Rect::new(0.0, 1.0, 0.0, 1.0);
        let ls = LevelSet::custom(|_, y| y - 0.2, |_, _| (0.0, 1.0));
        let rule = interface_rule(&rect, &ls, 6).unwrap();
        assert!((rule.total_weight() - 1.0).abs() < 1e-13);
        for &(nx, ny) in &rule.normals {
            assert!((nx, ny) == (0.0, 1.0));
        }
        for &(_, y) in &rule.points {
            assert!((y - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn tilted_interface_measure_correction() {
        // φ = y - x over the unit square: the zero set is the diagonal, and
        // the surface weight correction |∇φ|/|∂_h φ| = √2 recovers its length.
        let rect = Rect::new(0.0, 1.0, 0.0, 1.0);
        let ls = LevelSet::custom(|x, y| y - x, |_, _| (-1.0, 1.0));
        let rule = interface_rule(&rect, &ls, 8).unwrap();
        assert!((rule.total_weight() - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cut_moments_match_analytic_reduction_oracle() {
        // Low moments over the inside of the circle within one cut element.
        // Oracle: inside r = 0.5 the region over [0.25, 0.5]² is
        // { 0.25 ≤ x ≤ √(0.1875), 0.25 ≤ y ≤ √(0.25 - x²) }, so each moment
        // reduces to a smooth 1D integral in x, evaluated by composite Gauss.
        let ls = LevelSet::circle(0.0, 0.0, 0.5);
        let rect = Rect::new(0.25, 0.5, 0.25, 0.5);
        let rule = cut_volume_rule(&rect, ElementClass::Cut, &ls, Side::Neg, 12).unwrap();
        let xstar = 0.1875_f64.sqrt();
        let g = gauss_legendre(10).unwrap();
        for (a, b) in [(0u32, 0u32), (1, 0), (0, 1), (2, 2), (4, 0)] {
            let got = rule.integrate(|x, y| x.powi(a as i32) * y.powi(b as i32));
            let integrand = |x: f64| {
                let c = (0.25 - x * x).sqrt();
                let bp = b as i32 + 1;
                x.powi(a as i32) * (c.powi(bp) - 0.25_f64.powi(bp)) / bp as f64
            };
            let panels = 200;
            let hp = (xstar - 0.25) / panels as f64;
            let mut oracle = 0.0;
            for k in 0..panels {
                let lo = 0.25 + k as f64 * hp;
                for (tn, tw) in g.nodes.iter().zip(&g.weights) {
                    oracle += 0.5 * hp * tw * integrand(lo + 0.5 * hp * (tn + 1.0));
                }
            }
            assert!(
                (got - oracle).abs() <= 1e-8 * oracle.abs(),
                "moment ({a},{b}): {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn flower_moments_match_midpoint_oracle() {
        // Same check on the lobed interface; the dense midpoint oracle's own
        // boundary error limits the certifiable tolerance here.
        let ls = LevelSet::flower(0.0, 0.0, 0.5, 1.0 / 7.0, 5);
        let rect = Rect::new(0.25, 0.5, 0.25, 0.5);
        let rule = cut_volume_rule(&rect, ElementClass::Cut, &ls, Side::Neg, 12).unwrap();
        let m = 2000;
        let (dx, dy) = (rect.width() / m as f64, rect.height() / m as f64);
        for (a, b) in [(0u32, 0u32), (2, 2)] {
            let got = rule.integrate(|x, y| x.powi(a as i32) * y.powi(b as i32));
            let mut oracle = 0.0;
            for j in 0..m {
                for i in 0..m {
                    let x = rect.x0 + (i as f64 + 0.5) * dx;
                    let y = rect.y0 + (j as f64 + 0.5) * dy;
                    if ls.value(x, y) <= 0.0 {
                        oracle += x.powi(a as i32) * y.powi(b as i32) * dx * dy;
                    }
                }
            }
            assert!(
                (got - oracle).abs() <= 5e-5 * oracle.abs().max(1e-3),
                "moment ({a},{b}): {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn face_rule_integrates_polynomials() {
        let face = Face {
            left: 0,
            right: 1,
            a: (0.0, 0.0),
            b: (1.0, 0.0),
            normal: (0.0, 1.0),
        };
        let rule = face_rule(&face, 3);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        let x4: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(&(x, _), &w)| w * x.powi(4))
            .sum();
        assert!((x4 - 0.2).abs() < 1e-14);
        let half = Face {
            left: 0,
            right: 1,
            a: (0.0, 0.0),
            b: (0.0, 0.5),
            normal: (1.0, 0.0),
        };
        let rule = face_rule(&half, 3);
        assert!((rule.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_measure_cut_part_gives_empty_rule() {
        // The circle through the lattice point (0.5, 0): the neighboring
        // element only touches Ω̄₋ at that corner.
        let ls = LevelSet::circle(0.0, 0.0, 0.5);
        let rect = Rect::new(0.5, 0.625, 0.0, 0.125);
        let neg = cut_volume_rule(&rect, ElementClass::Cut, &ls, Side::Neg, 8).unwrap();
        assert!(neg.points.is_empty());
        let pos = cut_volume_rule(&rect, ElementClass::Cut, &ls, Side::Pos, 8).unwrap();
        assert!((pos.total_weight() - rect.area()).abs() < 1e-15);
        let surf = interface_rule(&rect, &ls, 8).unwrap();
        assert!(surf.points.is_empty());
    }
}
