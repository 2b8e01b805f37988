//! Scalar level-set fields.
//!
//! A level set φ splits the domain into Ω₋ = {φ < 0}, Ω₊ = {φ > 0} and the
//! interface Γ = {φ = 0}. The gradient is supplied analytically; the unit
//! normal ∇φ/|∇φ| is oriented from Ω₋ into Ω₊.

type Scalar2 = dyn Fn(f64, f64) -> f64 + Send + Sync;
type Vector2 = dyn Fn(f64, f64) -> (f64, f64) + Send + Sync;

/// Named level-set shapes selectable from the CLI config.
#[derive(Debug, Clone, PartialEq)]
pub enum LevelSetKind {
    Circle { cx: f64, cy: f64, r: f64 },
    Flower { cx: f64, cy: f64, r0: f64, amplitude: f64, lobes: u32 },
    HalfPlane { nx: f64, ny: f64, offset: f64 },
    Custom,
}

pub struct LevelSet {
    pub kind: LevelSetKind,
    value: Box<Scalar2>,
    gradient: Box<Vector2>,
}

impl std::fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LevelSet").field("kind", &self.kind).finish()
    }
}

impl LevelSet {
    /// φ = (x-cx)² + (y-cy)² - r², smooth everywhere, Ω₋ inside.
    pub fn circle(cx: f64, cy: f64, r: f64) -> Self {
        LevelSet {
            kind: LevelSetKind::Circle { cx, cy, r },
            value: Box::new(move |x, y| (x - cx) * (x - cx) + (y - cy) * (y - cy) - r * r),
            gradient: Box::new(move |x, y| (2.0 * (x - cx), 2.0 * (y - cy))),
        }
    }

    /// Polar curve ρ = r0 + amplitude·sin(lobes·θ) around (cx, cy);
    /// φ = ρ(x,y) - r0 - amplitude·sin(lobes·θ(x,y)). Singular only at the
    /// center point.
    pub fn flower(cx: f64, cy: f64, r0: f64, amplitude: f64, lobes: u32) -> Self {
        let lf = lobes as f64;
        LevelSet {
            kind: LevelSetKind::Flower { cx, cy, r0, amplitude, lobes },
            value: Box::new(move |x, y| {
                let dx = x - cx;
                let dy = y - cy;
                let rho = (dx * dx + dy * dy).sqrt();
                let theta = dy.atan2(dx);
                rho - r0 - amplitude * (lf * theta).sin()
            }),
            gradient: Box::new(move |x, y| {
                let dx = x - cx;
                let dy = y - cy;
                let r2 = dx * dx + dy * dy;
                let rho = r2.sqrt();
                let theta = dy.atan2(dx);
                let c = amplitude * lf * (lf * theta).cos();
                // ∇ρ = (dx, dy)/ρ, ∇θ = (-dy, dx)/ρ².
                (dx / rho + c * dy / r2, dy / rho - c * dx / r2)
            }),
        }
    }

    /// φ = n·(x, y) - offset with |n| normalized to 1.
    pub fn half_plane(nx: f64, ny: f64, offset: f64) -> Self {
        let len = (nx * nx + ny * ny).sqrt();
        let (nx, ny) = (nx / len, ny / len);
        LevelSet {
            kind: LevelSetKind::HalfPlane { nx, ny, offset },
            value: Box::new(move |x, y| nx * x + ny * y - offset),
            gradient: Box::new(move |_, _| (nx, ny)),
        }
    }

    /// Constant field with no zero set; sign(c) selects the single active
    /// side (used by the no-interface problems).
    pub fn constant(c: f64) -> Self {
        LevelSet {
            kind: LevelSetKind::Custom,
            value: Box::new(move |_, _| c),
            gradient: Box::new(|_, _| (0.0, 0.0)),
        }
    }

    pub fn custom(
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        LevelSet { kind: LevelSetKind::Custom, value: Box::new(value), gradient: Box::new(gradient) }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        (self.value)(x, y)
    }

    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        (self.gradient)(x, y)
    }

    /// ∇φ/|∇φ|, pointing from Ω₋ into Ω₊.
    pub fn unit_normal(&self, x: f64, y: f64) -> (f64, f64) {
        let (gx, gy) = self.gradient(x, y);
        let len = (gx * gx + gy * gy).sqrt();
        (gx / len, gy / len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_gradient(ls: &LevelSet, pts: &[(f64, f64)]) {
        let eps = 1e-6;
        for &(x, y) in pts {
            let (gx, gy) = ls.gradient(x, y);
            let fx = (ls.value(x + eps, y) - ls.value(x - eps, y)) / (2.0 * eps);
            let fy = (ls.value(x, y + eps) - ls.value(x, y - eps)) / (2.0 * eps);
            let scale = (gx * gx + gy * gy).sqrt().max(1.0);
            assert!(
                ((gx - fx).powi(2) + (gy - fy).powi(2)).sqrt() / scale < 1e-6,
                "gradient mismatch at ({x}, {y}): ({gx}, {gy}) vs ({fx}, {fy})"
            );
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let pts = [(0.3, 0.4), (-0.7, 0.2), (0.55, -0.61), (0.9, 0.9), (-0.2, -0.8)];
        check_gradient(&LevelSet::circle(0.0, 0.0, 0.5), &pts);
        check_gradient(&LevelSet::flower(0.0, 0.0, 0.5, 1.0 / 7.0, 5), &pts);
        check_gradient(&LevelSet::half_plane(1.0, 2.0, 0.1), &pts);
    }

    #[test]
    fn circle_sign_convention() {
        let ls = LevelSet::circle(0.0, 0.0, 0.5);
        assert!(ls.value(0.0, 0.0) < 0.0);
        assert!(ls.value(0.9, 0.0) > 0.0);
        let (nx, ny) = ls.unit_normal(0.5, 0.0);
        assert!((nx - 1.0).abs() < 1e-14 && ny.abs() < 1e-14);
    }

    #[test]
    fn flower_radius_bounds() {
        let ls = LevelSet::flower(0.0, 0.0, 0.5, 1.0 / 7.0, 5);
        // Points clearly inside the minimal radius and outside the maximal one.
        assert!(ls.value(0.3, 0.0) < 0.0);
        assert!(ls.value(0.7, 0.0) > 0.0);
        // The zero set is continuous across the atan2 branch cut.
        let th = std::f64::consts::PI - 1e-9;
        let r = 0.5 + (5.0 * th).sin() / 7.0;
        assert!(ls.value(r * th.cos(), r * th.sin()).abs() < 1e-7);
    }
}
