//! One-dimensional Legendre machinery and its 2D tensor products.
//!
//! Provides Legendre polynomial evaluation, Legendre-Gauss-Lobatto (LGL)
//! nodes, Gauss-Legendre quadrature rules, and the nodal Lagrange basis on
//! the LGL grid, with value and derivative tables at arbitrary points of the
//! reference square [-1,1]².

use thiserror::Error;

/// Highest supported polynomial degree. Beyond this the high normal
/// derivatives in the ghost penalty exhaust double precision.
pub const MAX_DEGREE: usize = 12;

#[derive(Debug, Error)]
pub enum LglError {
    #[error("Newton iteration for {what} failed to converge at degree {degree}")]
    NonConvergence { what: &'static str, degree: usize },
}

/// Evaluate the Legendre polynomial `L_n` and its derivative at `x`.
///
/// Uses the three-term recurrence for values together with
/// `L'_{k+1} = L'_{k-1} + (2k+1) L_k`, which remains valid at x = ±1.
pub fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut pm, mut p) = (1.0_f64, x);
    let (mut dm, mut d) = (0.0_f64, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let pn = ((2.0 * kf + 1.0) * x * p - kf * pm) / (kf + 1.0);
        let dn = dm + (2.0 * kf + 1.0) * p;
        pm = p;
        p = pn;
        dm = d;
        d = dn;
    }
    (p, d)
}

/// The p+1 Legendre-Gauss-Lobatto nodes of degree `p` on [-1, 1].
#[derive(Debug, Clone)]
pub struct NodeSet1D {
    pub degree: usize,
    /// Strictly increasing, nodes[0] = -1, nodes[p] = +1.
    pub nodes: Vec<f64>,
}

/// LGL points: ±1 plus the p-1 roots of L_p'.
///
/// Newton iteration on (1-x²)L_p'(x) from Chebyshev-Lobatto initial guesses,
/// polished to residual |(1-x²)L_p'(x)| < 1e-14, then symmetrized.
pub fn lgl_points(p: usize) -> Result<NodeSet1D, LglError> {
    assert!(p >= 1, "LGL nodes need degree >= 1");
    let mut nodes = vec![0.0; p + 1];
    nodes[0] = -1.0;
    nodes[p] = 1.0;
    let pf = p as f64;
    for j in 1..p {
        // Chebyshev-Lobatto initial guess.
        let mut x = -(std::f64::consts::PI * j as f64 / pf).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (lp, dlp) = legendre_eval(p, x);
            // d/dx [(1-x²)L_p'] = -p(p+1)L_p, so the Newton step is
            // x <- x + (1-x²)L_p' / (p(p+1)L_p).
            let step = (1.0 - x * x) * dlp / (pf * (pf + 1.0) * lp);
            x += step;
            if step.abs() < 1e-15 {
                let (_, dlp) = legendre_eval(p, x);
                if ((1.0 - x * x) * dlp).abs() < 1e-14 {
                    converged = true;
                    break;
                }
            }
        }
        if !converged {
            return Err(LglError::NonConvergence { what: "LGL nodes", degree: p });
        }
        nodes[j] = x;
    }
    // Symmetrize to make nodes[i] = -nodes[p-i] exact.
    for i in 0..=(p / 2) {
        let s = 0.5 * (nodes[i] - nodes[p - i]);
        nodes[i] = s;
        nodes[p - i] = -s;
    }
    if p % 2 == 0 {
        nodes[p / 2] = 0.0;
    }
    nodes[0] = -1.0;
    nodes[p] = 1.0;
    Ok(NodeSet1D { degree: p, nodes })
}

/// An n-point quadrature rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct QuadRule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// n-point Gauss-Legendre rule, exact for polynomials of degree 2n-1.
///
/// Nodes are the roots of L_n, weights w_k = 2 / ((1-x_k²) L_n'(x_k)²).
pub fn gauss_legendre(n: usize) -> Result<QuadRule1D, LglError> {
    assert!(n >= 1, "Gauss rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for k in 0..n {
        let mut x = -((std::f64::consts::PI * (k as f64 + 0.75)) / (nf + 0.5)).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (l, dl) = legendre_eval(n, x);
            let step = l / dl;
            x -= step;
            if step.abs() < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(LglError::NonConvergence { what: "Gauss nodes", degree: n });
        }
        let (_, dl) = legendre_eval(n, x);
        nodes[k] = x;
        weights[k] = 2.0 / ((1.0 - x * x) * dl * dl);
    }
    // Symmetrize node/weight pairs.
    for k in 0..n / 2 {
        let s = 0.5 * (nodes[k] - nodes[n - 1 - k]);
        nodes[k] = s;
        nodes[n - 1 - k] = -s;
        let w = 0.5 * (weights[k] + weights[n - 1 - k]);
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadRule1D { nodes, weights })
}

/// Nodal Lagrange basis on a 1D LGL grid.
///
/// Values are evaluated in barycentric form for stability at high degree;
/// derivatives of any order come from powers of the spectral differentiation
/// matrix, since l_i^(j) has degree ≤ p and is therefore reproduced exactly
/// by interpolation at the p+1 nodes.
#[derive(Debug, Clone)]
pub struct Lagrange1D {
    pub nodes: Vec<f64>,
    bary: Vec<f64>,
    /// dmat[j-1] holds l_i^(j)(ξ_k) at entry k*(p+1)+i, for j = 1..=p.
    dmat: Vec<Vec<f64>>,
}

impl Lagrange1D {
    pub fn new(set: &NodeSet1D) -> Self {
        let n = set.nodes.len();
        let p = set.degree;
        let mut bary = vec![1.0_f64; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    bary[i] *= set.nodes[i] - set.nodes[j];
                }
            }
            bary[i] = 1.0 / bary[i];
        }
        // First-order differentiation matrix from barycentric weights.
        let mut d1 = vec![0.0_f64; n * n];
        for k in 0..n {
            let mut diag = 0.0;
            for i in 0..n {
                if i != k {
                    let v = (bary[i] / bary[k]) / (set.nodes[k] - set.nodes[i]);
                    d1[k * n + i] = v;
                    diag -= v;
                }
            }
            d1[k * n + k] = diag;
        }
        let mut dmat = Vec::with_capacity(p);
        dmat.push(d1);
        for j in 1..p {
            let prev = &dmat[j - 1];
            let d1 = &dmat[0];
            let mut next = vec![0.0_f64; n * n];
            // next = D1 * prev: l^(j+1) at nodes = D1 applied to l^(j) samples.
            for k in 0..n {
                for m in 0..n {
                    let a = d1[k * n + m];
                    if a != 0.0 {
                        for i in 0..n {
                            next[k * n + i] += a * prev[m * n + i];
                        }
                    }
                }
            }
            dmat.push(next);
        }
        Lagrange1D { nodes: set.nodes.clone(), bary, dmat }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Cardinal function values at `x` (barycentric second form).
    pub fn values(&self, x: f64, out: &mut [f64]) {
        let n = self.nodes.len();
        for i in 0..n {
            if x == self.nodes[i] {
                out[..n].fill(0.0);
                out[i] = 1.0;
                return;
            }
        }
        let mut denom = 0.0;
        for i in 0..n {
            let t = self.bary[i] / (x - self.nodes[i]);
            out[i] = t;
            denom += t;
        }
        for v in out[..n].iter_mut() {
            *v /= denom;
        }
    }

    /// Values and first derivatives of every cardinal function at `x`.
    pub fn values_and_first(&self, x: f64, vals: &mut [f64], derivs: &mut [f64]) {
        let n = self.nodes.len();
        self.values(x, vals);
        let d1 = &self.dmat[0];
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += vals[k] * d1[k * n + i];
            }
            derivs[i] = acc;
        }
    }

    /// j-th derivative of every cardinal function at an element endpoint
    /// (left = ξ_0, right = ξ_p). j = 0 gives the cardinal row itself.
    pub fn endpoint_derivs(&self, j: usize, right: bool, out: &mut [f64]) {
        let n = self.nodes.len();
        let row = if right { n - 1 } else { 0 };
        if j == 0 {
            out[..n].fill(0.0);
            out[row] = 1.0;
            return;
        }
        let d = &self.dmat[j - 1];
        out[..n].copy_from_slice(&d[row * n..(row + 1) * n]);
    }
}

/// Tensor-product nodal basis on the reference square, indexed by
/// (i, j) ∈ [0, p]² with flat index j*(p+1)+i.
#[derive(Debug, Clone)]
pub struct Basis2D {
    pub degree: usize,
    pub lag: Lagrange1D,
}

/// Dense evaluation table of all basis functions at a set of reference
/// points. Entry layout is point-major: `values[g * ndofs + dof]`.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub npoints: usize,
    pub ndofs: usize,
    pub values: Vec<f64>,
    pub ds: Vec<f64>,
    pub dt: Vec<f64>,
}

impl Basis2D {
    pub fn new(p: usize) -> Result<Self, LglError> {
        let set = lgl_points(p)?;
        Ok(Basis2D { degree: p, lag: Lagrange1D::new(&set) })
    }

    pub fn ndofs(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.degree + 1) + i
    }

    /// Values and reference-coordinate gradients of all basis functions at
    /// one point (s, t).
    pub fn eval(&self, s: f64, t: f64, vals: &mut [f64], ds: &mut [f64], dt: &mut [f64]) {
        let n = self.degree + 1;
        let mut vs = vec![0.0; n];
        let mut dvs = vec![0.0; n];
        let mut vt = vec![0.0; n];
        let mut dvt = vec![0.0; n];
        self.lag.values_and_first(s, &mut vs, &mut dvs);
        self.lag.values_and_first(t, &mut vt, &mut dvt);
        for j in 0..n {
            for i in 0..n {
                let a = j * n + i;
                vals[a] = vs[i] * vt[j];
                ds[a] = dvs[i] * vt[j];
                dt[a] = vs[i] * dvt[j];
            }
        }
    }

    /// Dense table of values and first derivatives at the given points.
    pub fn eval_grid(&self, points: &[(f64, f64)]) -> BasisTable {
        let nd = self.ndofs();
        let mut table = BasisTable {
            npoints: points.len(),
            ndofs: nd,
            values: vec![0.0; points.len() * nd],
            ds: vec![0.0; points.len() * nd],
            dt: vec![0.0; points.len() * nd],
        };
        for (g, &(s, t)) in points.iter().enumerate() {
            let lo = g * nd;
            let hi = lo + nd;
            self.eval(
                s,
                t,
                &mut table.values[lo..hi],
                &mut table.ds[lo..hi],
                &mut table.dt[lo..hi],
            );
        }
        table
    }
}
