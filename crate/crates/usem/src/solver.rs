//! Sparse symmetric solvers: a simplicial Cholesky factorization with a
//! fill-reducing nested-dissection ordering, the source-problem solve with
//! iterative refinement, a shift-invert Lanczos eigensolver for the pencil
//! A u = λ M u (M-inner product, full reorthogonalization, deflation of
//! converged pairs), and 2-norm condition estimation.

use crate::sparse::SparseSymMatrix;
use thiserror::Error;

pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("matrix is singular or not positive definite")]
    SingularMatrix,
    #[error("sparse factorization failed")]
    FactorizationFailed,
    #[error("eigensolver converged {got} of {requested} pairs")]
    NotConverged { got: usize, requested: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Deterministic splitmix64 stream for start vectors.
fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z = z ^ (z >> 31);
    (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

pub fn inf_norm(a: &SparseSymMatrix) -> f64 {
    (0..a.n)
        .map(|i| {
            let (_, vals) = a.row(i);
            vals.iter().map(|v| v.abs()).sum::<f64>()
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Ordering
// ---------------------------------------------------------------------------

/// Recursive bisection ordering from breadth-first level structures.
/// Separator levels are eliminated last; small subgraphs keep the input order.
fn nd_order(a: &SparseSymMatrix) -> Vec<usize> {
    let n = a.n;
    let mut perm = Vec::with_capacity(n);
    let mut level = vec![u32::MAX; n];
    let mut epoch_of = vec![0u32; n];
    let mut epoch = 0u32;
    let mut queue: Vec<usize> = Vec::with_capacity(n);
    let mut stack: Vec<Vec<usize>> = vec![(0..n).collect()];

    while let Some(mut verts) = stack.pop() {
        if verts.len() <= 96 {
            perm.extend_from_slice(&verts);
            continue;
        }
        // BFS from the first vertex; collect the reached component. The
        // subset membership test relies on epoch_of having been stamped
        // with the current epoch for exactly the vertices of `verts`.
        epoch += 1;
        let bfs = |seed: usize,
                   epoch: u32,
                   epoch_of: &mut [u32],
                   level: &mut [u32],
                   queue: &mut Vec<usize>| {
            queue.clear();
            queue.push(seed);
            level[seed] = 0;
            let mut head = 0;
            while head < queue.len() {
                let v = queue[head];
                head += 1;
                let (cols, _) = a.row(v);
                for c in cols {
                    let u = *c as usize;
                    if epoch_of[u] == epoch && level[u] == u32::MAX {
                        level[u] = level[v] + 1;
                        queue.push(u);
                    }
                }
            }
        };
        for &v in &verts {
            epoch_of[v] = epoch;
            level[v] = u32::MAX;
        }
        bfs(verts[0], epoch, &mut epoch_of, &mut level, &mut queue);
        if queue.len() < verts.len() {
            // Disconnected: peel off the reached component.
            let comp: Vec<usize> = queue.clone();
            let rest: Vec<usize> = verts.iter().copied().filter(|&v| level[v] == u32::MAX).collect();
            stack.push(rest);
            stack.push(comp);
            continue;
        }
        // Pseudo-peripheral start: rerun BFS from the farthest vertex.
        let far = *queue.last().unwrap();
        for &v in &verts {
            level[v] = u32::MAX;
        }
        bfs(far, epoch, &mut epoch_of, &mut level, &mut queue);
        let depth = level[*queue.last().unwrap()];
        if depth < 2 {
            perm.extend_from_slice(&verts);
            continue;
        }
        // Split at the level holding the median vertex.
        verts.sort_unstable();
        let mut counts = vec![0usize; depth as usize + 1];
        for &v in &verts {
            counts[level[v] as usize] += 1;
        }
        let half = verts.len() / 2;
        let mut acc = 0;
        let mut sep_level = 0;
        for (l, c) in counts.iter().enumerate() {
            acc += c;
            if acc > half {
                sep_level = l as u32;
                break;
            }
        }
        sep_level = sep_level.clamp(1, depth - 1);
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut sep = Vec::new();
        for &v in &verts {
            match level[v].cmp(&sep_level) {
                std::cmp::Ordering::Less => lo.push(v),
                std::cmp::Ordering::Equal => sep.push(v),
                std::cmp::Ordering::Greater => hi.push(v),
            }
        }
        if lo.is_empty() || hi.is_empty() {
            perm.extend_from_slice(&verts);
            continue;
        }
        // Halves first, separator last: push in reverse of pop order.
        stack.push(sep);
        stack.push(hi);
        stack.push(lo);
    }
    debug_assert_eq!(perm.len(), n);
    perm
}

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

/// Sparse Cholesky factor A = P L Lᵀ Pᵀ with L in compressed columns, the
/// diagonal entry first in each column.
pub struct CholeskyFactor {
    n: usize,
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    vals: Vec<f64>,
}

struct LowerPattern {
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    vals: Vec<f64>,
}

/// Permuted strictly-sorted lower-triangular rows (diagonal included last).
fn permuted_lower(a: &SparseSymMatrix, perm: &[usize], iperm: &[usize]) -> LowerPattern {
    let n = a.n;
    let mut row_ptr = vec![0usize; n + 1];
    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for k in 0..n {
        let (cols, vals) = a.row(perm[k]);
        for (c, v) in cols.iter().zip(vals) {
            let j = iperm[*c as usize];
            if j <= k {
                rows[k].push((j as u32, *v));
            }
        }
        rows[k].sort_unstable_by_key(|e| e.0);
    }
    let mut col_idx = Vec::new();
    let mut vals = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        col_idx.extend(row.iter().map(|e| e.0));
        vals.extend(row.iter().map(|e| e.1));
        row_ptr[k + 1] = col_idx.len();
    }
    LowerPattern { row_ptr, col_idx, vals }
}

fn elimination_tree(lower: &LowerPattern, n: usize) -> Vec<i64> {
    let mut parent = vec![-1i64; n];
    let mut ancestor = vec![-1i64; n];
    for k in 0..n {
        for idx in lower.row_ptr[k]..lower.row_ptr[k + 1] {
            let mut i = lower.col_idx[idx] as i64;
            while i != -1 && (i as usize) < k {
                let next = ancestor[i as usize];
                ancestor[i as usize] = k as i64;
                if next == -1 {
                    parent[i as usize] = k as i64;
                }
                i = next;
            }
        }
    }
    parent
}

/// Pattern of row k of L via elimination-tree reach; returns `top` such that
/// stack[top..n] holds the pattern in topological order.
fn ereach(
    lower: &LowerPattern,
    k: usize,
    parent: &[i64],
    stamp: &mut [u32],
    mark: u32,
    stack: &mut [usize],
    path: &mut [usize],
) -> usize {
    let n = parent.len();
    let mut top = n;
    stamp[k] = mark;
    for idx in lower.row_ptr[k]..lower.row_ptr[k + 1] {
        let mut i = lower.col_idx[idx] as usize;
        if i == k {
            continue;
        }
        let mut len = 0;
        while stamp[i] != mark {
            path[len] = i;
            len += 1;
            stamp[i] = mark;
            debug_assert!(parent[i] >= 0, "etree path must reach the pivot row");
            i = parent[i] as usize;
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = path[len];
        }
    }
    top
}

impl CholeskyFactor {
    /// Factor a symmetric positive definite matrix. `shift` is added to the
    /// diagonal (used by callers to regularize nearly singular operators).
    pub fn factor(a: &SparseSymMatrix, shift: f64) -> Result<Self, SolverError> {
        let n = a.n;
        let perm = nd_order(a);
        let mut iperm = vec![0usize; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }
        let lower = permuted_lower(a, &perm, &iperm);
        let parent = elimination_tree(&lower, n);

        // Column counts from a symbolic pass.
        let mut stamp = vec![0u32; n];
        let mut stack = vec![0usize; n];
        let mut path = vec![0usize; n];
        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(&lower, k, &parent, &mut stamp, k as u32 + 1, &mut stack, &mut path);
            for &j in &stack[top..n] {
                counts[j] += 1;
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for j in 0..n {
            col_ptr[j + 1] = col_ptr[j] + counts[j];
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0u32; nnz];
        let mut vals = vec![0.0f64; nnz];
        let mut fill = col_ptr.clone();

        // Numeric up-looking pass.
        let mut stamp = vec![0u32; n];
        let mut x = vec![0.0f64; n];
        for k in 0..n {
            let top = ereach(&lower, k, &parent, &mut stamp, k as u32 + 1, &mut stack, &mut path);
            let mut d = shift;
            for idx in lower.row_ptr[k]..lower.row_ptr[k + 1] {
                let j = lower.col_idx[idx] as usize;
                if j == k {
                    d += lower.vals[idx];
                } else {
                    x[j] = lower.vals[idx];
                }
            }
            for &j in &stack[top..n] {
                let lkj = x[j] / vals[col_ptr[j]];
                x[j] = 0.0;
                for p in col_ptr[j] + 1..fill[j] {
                    x[row_idx[p] as usize] -= vals[p] * lkj;
                }
                d -= lkj * lkj;
                row_idx[fill[j]] = k as u32;
                vals[fill[j]] = lkj;
                fill[j] += 1;
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(SolverError::SingularMatrix);
            }
            row_idx[col_ptr[k]] = k as u32;
            vals[col_ptr[k]] = d.sqrt();
            fill[k] = col_ptr[k] + 1;
        }
        Ok(CholeskyFactor { n, perm, col_ptr, row_idx, vals })
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|k| b[self.perm[k]]).collect();
        // Forward: L y = Pb.
        for j in 0..n {
            let yj = y[j] / self.vals[self.col_ptr[j]];
            y[j] = yj;
            for p in self.col_ptr[j] + 1..self.col_ptr[j + 1] {
                y[self.row_idx[p] as usize] -= self.vals[p] * yj;
            }
        }
        // Backward: Lᵀ z = y.
        for j in (0..n).rev() {
            let mut acc = y[j];
            for p in self.col_ptr[j] + 1..self.col_ptr[j + 1] {
                acc -= self.vals[p] * y[self.row_idx[p] as usize];
            }
            y[j] = acc / self.vals[self.col_ptr[j]];
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.perm[k]] = y[k];
        }
        x
    }
}

// ---------------------------------------------------------------------------
// Source solve
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub rel_residual: f64,
    pub refinements: usize,
    /// Set when iterative refinement stalls above the target residual.
    pub ill_conditioned: bool,
}

fn residual_norm(a: &SparseSymMatrix, x: &[f64], b: &[f64], r: &mut [f64]) -> f64 {
    a.matvec(x, r);
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for i in 0..a.n {
        r[i] = b[i] - r[i];
        num += r[i] * r[i];
        den += b[i] * b[i];
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Detect rows that are exactly empty (no structural entries or all-zero
/// values). Such rows come from dofs whose every contribution has zero
/// measure (e.g. the interface grazing a corner) in unstabilized operators.
pub fn zero_rows(a: &SparseSymMatrix) -> Vec<bool> {
    (0..a.n)
        .map(|i| {
            let (_, vals) = a.row(i);
            vals.iter().all(|v| *v == 0.0)
        })
        .collect()
}

/// Direct solve of a reduced symmetric positive definite system with one or
/// two steps of iterative refinement. Exactly-zero rows are pinned to
/// x_i = b_i via a unit diagonal before factorization.
pub fn solve_source(a: &SparseSymMatrix, b: &[f64]) -> Result<SolveReport, SolverError> {
    if a.n != b.len() {
        return Err(SolverError::DimensionMismatch(a.n, b.len()));
    }
    let zeros = zero_rows(a);
    let work;
    let a = if zeros.iter().any(|z| *z) {
        let diag: Vec<f64> = zeros.iter().map(|&z| if z { 1.0 } else { 0.0 }).collect();
        work = a.add_scaled(&SparseSymMatrix::from_diagonal(&diag), 1.0).expect("same dim");
        &work
    } else {
        a
    };
    // Nearly semi-definite operators (unstabilized small cuts) can produce a
    // nonpositive pivot; retry with a relative diagonal shift and let the
    // refinement steps against the true matrix recover what accuracy exists.
    let mut shifted = false;
    let chol = match CholeskyFactor::factor(a, 0.0) {
        Ok(c) => c,
        Err(_) => {
            shifted = true;
            let mut delta = 1e-14 * inf_norm(a);
            let mut got = None;
            for _ in 0..8 {
                if let Ok(c) = CholeskyFactor::factor(a, delta) {
                    got = Some(c);
                    break;
                }
                delta *= 100.0;
            }
            got.ok_or(SolverError::SingularMatrix)?
        }
    };
    let mut x = chol.solve(b);
    let mut r = vec![0.0; a.n];
    let mut res = residual_norm(a, &x, b, &mut r);
    let mut refinements = 0;
    let max_ref = if shifted { 30 } else { 3 };
    while res > 1e-14 && refinements < max_ref {
        let dx = chol.solve(&r);
        for i in 0..a.n {
            x[i] += dx[i];
        }
        let new_res = residual_norm(a, &x, b, &mut r);
        refinements += 1;
        if new_res >= 0.5 * res {
            res = new_res.min(res);
            break;
        }
        res = new_res;
    }
    Ok(SolveReport { x, rel_residual: res, refinements, ill_conditioned: res > 1e-10 })
}

// ---------------------------------------------------------------------------
// Generalized eigenproblem
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// M-orthonormal eigenvectors, one per eigenvalue.
    pub vectors: Vec<Vec<f64>>,
    pub converged: bool,
}

fn m_dot(m: &SparseSymMatrix, x: &[f64], y: &[f64], tmp: &mut [f64]) -> f64 {
    m.matvec(y, tmp);
    x.iter().zip(tmp.iter()).map(|(a, b)| a * b).sum()
}

/// k smallest eigenpairs of A u = λ M u by shift-invert Lanczos at shift 0:
/// Lanczos on A⁻¹M in the M-inner product with full reorthogonalization.
/// Converged pairs are locked and deflated; restarts recover multiple
/// eigenvalues. Deterministic for a fixed seed.
pub fn solve_smallest_eigs(
    a: &SparseSymMatrix,
    m: &SparseSymMatrix,
    k: usize,
    seed: u64,
) -> Result<EigenResult, SolverError> {
    if a.n != m.n {
        return Err(SolverError::DimensionMismatch(a.n, m.n));
    }
    let n = a.n;
    let k = k.min(n);
    if k == 0 {
        return Ok(EigenResult { values: vec![], vectors: vec![], converged: true });
    }
    let chol = CholeskyFactor::factor(a, 0.0).map_err(|_| SolverError::FactorizationFailed)?;
    let norm_a = inf_norm(a);
    let tol = 1e-10;

    let mut locked_vals: Vec<f64> = Vec::new();
    let mut locked_vecs: Vec<Vec<f64>> = Vec::new();
    let mut rng = seed;
    let mut tmp = vec![0.0; n];

    'restarts: for _restart in 0..8 {
        if locked_vals.len() >= k {
            break;
        }
        // Random start, deflated against locked vectors, M-normalized.
        let mut v: Vec<f64> = (0..n).map(|_| splitmix(&mut rng)).collect();
        for u in &locked_vecs {
            let c = m_dot(m, u, &v, &mut tmp);
            for i in 0..n {
                v[i] -= c * u[i];
            }
        }
        let nv = m_dot(m, &v, &v, &mut tmp).max(0.0).sqrt();
        if nv < 1e-300 {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= nv;
        }

        let max_steps = (4 * k + 40).min(n - locked_vals.len()).max(1);
        let mut basis: Vec<Vec<f64>> = vec![v];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        for step in 0..max_steps {
            let vj = basis[step].clone();
            m.matvec(&vj, &mut tmp);
            let mut w = chol.solve(&tmp);
            let alpha: f64 = w.iter().zip(tmp.iter()).map(|(a, b)| a * b).sum();
            if step > 0 {
                let beta = betas[step - 1];
                let vm = &basis[step - 1];
                for i in 0..n {
                    w[i] -= beta * vm[i];
                }
            }
            for i in 0..n {
                w[i] -= alpha * vj[i];
            }
            // Deflate and fully reorthogonalize, twice.
            for _ in 0..2 {
                m.matvec(&w, &mut tmp);
                for u in locked_vecs.iter().chain(basis.iter()) {
                    let c: f64 = u.iter().zip(tmp.iter()).map(|(a, b)| a * b).sum();
                    if c != 0.0 {
                        for i in 0..n {
                            w[i] -= c * u[i];
                        }
                    }
                }
            }
            alphas.push(alpha);
            let beta = m_dot(m, &w, &w, &mut tmp).max(0.0).sqrt();
            if beta < 1e-12 || step + 1 == max_steps {
                break;
            }
            betas.push(beta);
            for wi in w.iter_mut() {
                *wi /= beta;
            }
            basis.push(w);
        }

        // Ritz pairs of the tridiagonal.
        let s = alphas.len();
        if s == 0 {
            continue;
        }
        let mut t = nalgebra::DMatrix::<f64>::zeros(s, s);
        for i in 0..s {
            t[(i, i)] = alphas[i];
            if i + 1 < s {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = nalgebra::SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..s).collect();
        // Largest θ of A⁻¹M first: smallest λ of the pencil.
        order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
        let mut accepted_any = false;
        for &ri in &order {
            if locked_vals.len() >= k + 2 {
                break;
            }
            let theta = eig.eigenvalues[ri];
            if theta <= 0.0 {
                continue;
            }
            let lambda = 1.0 / theta;
            let mut u = vec![0.0; n];
            for (j, vb) in basis.iter().enumerate().take(s) {
                let c = eig.eigenvectors[(j, ri)];
                for i in 0..n {
                    u[i] += c * vb[i];
                }
            }
            let nu = m_dot(m, &u, &u, &mut tmp).max(0.0).sqrt();
            if nu < 1e-300 {
                continue;
            }
            for ui in u.iter_mut() {
                *ui /= nu;
            }
            // Residual of the original pencil.
            let mut au = vec![0.0; n];
            a.matvec(&u, &mut au);
            m.matvec(&u, &mut tmp);
            let mut res = 0.0f64;
            let mut unorm = 0.0f64;
            for i in 0..n {
                let r = au[i] - lambda * tmp[i];
                res += r * r;
                unorm += u[i] * u[i];
            }
            let rel = res.sqrt() / (norm_a * unorm.sqrt().max(f64::MIN_POSITIVE));
            if rel < tol {
                locked_vals.push(lambda);
                locked_vecs.push(u);
                accepted_any = true;
            }
        }
        if !accepted_any && locked_vals.len() >= k {
            break 'restarts;
        }
    }

    let mut order: Vec<usize> = (0..locked_vals.len()).collect();
    order.sort_by(|&i, &j| locked_vals[i].partial_cmp(&locked_vals[j]).unwrap());
    order.truncate(k);
    let values: Vec<f64> = order.iter().map(|&i| locked_vals[i]).collect();
    let vectors: Vec<Vec<f64>> = order.iter().map(|&i| locked_vecs[i].clone()).collect();
    let converged = values.len() == k;
    if !converged {
        return Err(SolverError::NotConverged { got: values.len(), requested: k });
    }
    Ok(EigenResult { values, vectors, converged })
}

// ---------------------------------------------------------------------------
// Condition estimation
// ---------------------------------------------------------------------------

/// Largest Ritz value of a symmetric operator from a plain Lanczos sweep
/// with full reorthogonalization. Far more reliable than power iteration on
/// clustered extreme spectra.
fn lanczos_largest(n: usize, mut op: impl FnMut(&[f64], &mut [f64]), seed: u64) -> f64 {
    let steps = 90.min(n);
    let mut rng = seed;
    let mut v: Vec<f64> = (0..n).map(|_| splitmix(&mut rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for vi in v.iter_mut() {
        *vi /= norm;
    }
    let mut basis = vec![v];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    for j in 0..steps {
        op(&basis[j], &mut w);
        let alpha: f64 = w.iter().zip(&basis[j]).map(|(a, b)| a * b).sum();
        alphas.push(alpha);
        for (i, u) in basis.iter().enumerate() {
            let c = if i == j {
                alpha
            } else if i + 1 == j {
                betas[i]
            } else {
                0.0
            };
            if c != 0.0 {
                for l in 0..n {
                    w[l] -= c * u[l];
                }
            }
        }
        for u in &basis {
            let c: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
            if c != 0.0 {
                for l in 0..n {
                    w[l] -= c * u[l];
                }
            }
        }
        let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if beta < 1e-14 || j + 1 == steps {
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }
    let s = alphas.len();
    let mut t = nalgebra::DMatrix::<f64>::zeros(s, s);
    for i in 0..s {
        t[(i, i)] = alphas[i];
        if i + 1 < s {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    nalgebra::SymmetricEigen::new(t)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::MIN, f64::max)
}

/// 2-norm condition estimate λ_max/λ_min of a symmetric operator: Lanczos on
/// A for λ_max and on A⁻¹ (through a possibly regularized Cholesky
/// factorization) for λ_min. Exactly-zero rows are excluded. Accuracy is
/// well within the 10% contract.
pub fn condition_estimate(a: &SparseSymMatrix) -> Result<f64, SolverError> {
    let zeros = zero_rows(a);
    let work;
    let a = if zeros.iter().any(|z| *z) {
        let keep: Vec<bool> = zeros.iter().map(|z| !z).collect();
        work = a.restrict(&keep).0;
        &work
    } else {
        a
    };
    let n = a.n;
    if n == 0 {
        return Ok(1.0);
    }
    let lambda_max = lanczos_largest(n, |x, y| a.matvec(x, y), DEFAULT_SEED);

    let mut shift = 0.0;
    let chol = match CholeskyFactor::factor(a, 0.0) {
        Ok(c) => c,
        Err(_) => {
            shift = 1e-14 * lambda_max.abs().max(f64::MIN_POSITIVE);
            let mut ok = None;
            for _ in 0..8 {
                match CholeskyFactor::factor(a, shift) {
                    Ok(c) => {
                        ok = Some(c);
                        break;
                    }
                    Err(_) => shift *= 100.0,
                }
            }
            ok.ok_or(SolverError::FactorizationFailed)?
        }
    };
    let inv_largest = lanczos_largest(n, |x, y| y.copy_from_slice(&chol.solve(x)), DEFAULT_SEED);
    let lambda_min = (1.0 / inv_largest - shift).max(f64::MIN_POSITIVE);
    Ok(lambda_max / lambda_min)
}

// ---------------------------------------------------------------------------
// Dense reference (test oracle / small fallback)
// ---------------------------------------------------------------------------

/// Dense generalized symmetric eigensolve via M = LLᵀ and a symmetric
/// eigendecomposition of L⁻¹AL⁻ᵀ. Reference implementation for desk sizes.
pub fn dense_reference_eigs(
    a: &SparseSymMatrix,
    m: &SparseSymMatrix,
    k: usize,
) -> Result<EigenResult, SolverError> {
    let n = a.n;
    let ad = nalgebra::DMatrix::from_fn(n, n, |i, j| a.get(i, j));
    let md = nalgebra::DMatrix::from_fn(n, n, |i, j| m.get(i, j));
    let chol = md.cholesky().ok_or(SolverError::SingularMatrix)?;
    let l = chol.l();
    let mut c = ad;
    // C = L⁻¹ A L⁻ᵀ.
    l.solve_lower_triangular_mut(&mut c);
    c.transpose_mut();
    l.solve_lower_triangular_mut(&mut c);
    // Symmetrize roundoff before the eigensolve.
    let c = (&c + c.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    order.truncate(k.min(n));
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    for &i in &order {
        values.push(eig.eigenvalues[i]);
        let y = eig.eigenvectors.column(i).clone_owned();
        let x = chol.l().transpose().solve_upper_triangular(&y).unwrap();
        vectors.push(x.iter().copied().collect());
    }
    Ok(EigenResult { values, vectors, converged: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_spd(n: usize, seed: u64) -> SparseSymMatrix {
        let mut rng = seed;
        let mut dense = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..n {
                dense[i][j] = splitmix(&mut rng);
            }
        }
        // A = B Bᵀ + n·I.
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += dense[i][l] * dense[j][l];
                }
                if i == j {
                    acc += n as f64;
                }
                triplets.push((i as u32, j as u32, acc));
            }
        }
        SparseSymMatrix::from_triplets(n, triplets)
    }

    #[test]
    fn cholesky_solves_identity_and_diag() {
        let a = SparseSymMatrix::identity(4);
        let rep = solve_source(&a, &[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(rep.x, vec![1.0, -2.0, 3.0, 0.5]);
        let a = SparseSymMatrix::from_diagonal(&[1.0, 2.0, 4.0]);
        let rep = solve_source(&a, &[1.0, 2.0, 4.0]).unwrap();
        for v in &rep.x {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cholesky_matches_dense_oracle() {
        let n = 50;
        let a = random_spd(n, 42);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let rep = solve_source(&a, &b).unwrap();
        assert!(rep.rel_residual < 1e-12);
        // Dense oracle via nalgebra.
        let ad = nalgebra::DMatrix::from_fn(n, n, |i, j| a.get(i, j));
        let bd = nalgebra::DVector::from_vec(b.clone());
        let xd = ad.cholesky().unwrap().solve(&bd);
        for i in 0..n {
            assert!((rep.x[i] - xd[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn laplacian_1d_solve_and_order() {
        // Tridiagonal 1D Laplacian: checks the ordering + factorization on a
        // structured sparse pattern.
        let n = 500;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i as u32, i as u32, 2.0));
            if i + 1 < n {
                trip.push((i as u32, i as u32 + 1, -1.0));
                trip.push((i as u32 + 1, i as u32, -1.0));
            }
        }
        let a = SparseSymMatrix::from_triplets(n, trip);
        let b = vec![1.0; n];
        let rep = solve_source(&a, &b).unwrap();
        assert!(rep.rel_residual < 1e-11, "residual {}", rep.rel_residual);
        // Exact solution of -u'' = 1 with u(0)=u(n+1)=0 sampled on the grid.
        let exact = |i: usize| {
            let x = (i + 1) as f64;
            0.5 * x * ((n + 1) as f64 - x)
        };
        for i in 0..n {
            assert!((rep.x[i] - exact(i)).abs() < 1e-8 * exact(n / 2));
        }
    }

    #[test]
    fn eigs_identity_and_diag() {
        let a = SparseSymMatrix::identity(6);
        let m = SparseSymMatrix::identity(6);
        let r = solve_smallest_eigs(&a, &m, 3, DEFAULT_SEED).unwrap();
        for v in &r.values {
            assert!((v - 1.0).abs() < 1e-9);
        }
        let a = SparseSymMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let r = solve_smallest_eigs(&a, &SparseSymMatrix::identity(3), 2, DEFAULT_SEED).unwrap();
        assert!((r.values[0] - 1.0).abs() < 1e-9);
        assert!((r.values[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn eigs_match_dense_oracle_with_multiplicity() {
        // Pencil with a repeated eigenvalue; Lanczos must find both copies.
        let n = 40;
        let mut diag: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        diag[1] = 1.0; // double eigenvalue 1 after M-scaling below
        let a = SparseSymMatrix::from_diagonal(&diag);
        let m = SparseSymMatrix::identity(n);
        let got = solve_smallest_eigs(&a, &m, 4, DEFAULT_SEED).unwrap();
        let oracle = dense_reference_eigs(&a, &m, 4).unwrap();
        for (g, o) in got.values.iter().zip(&oracle.values) {
            assert!((g - o).abs() < 1e-8 * o.max(1.0), "{g} vs {o}");
        }
        // M-orthonormality.
        let mut tmp = vec![0.0; n];
        for i in 0..got.vectors.len() {
            for j in 0..got.vectors.len() {
                let d = m_dot(&m, &got.vectors[i], &got.vectors[j], &mut tmp);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn eigs_generalized_spd_pencil() {
        let n = 60;
        let a = random_spd(n, 7);
        let mut m = random_spd(n, 13);
        // Make M better conditioned.
        m = m
            .add_scaled(&SparseSymMatrix::from_diagonal(&vec![n as f64; n]), 1.0)
            .unwrap();
        let got = solve_smallest_eigs(&a, &m, 5, DEFAULT_SEED).unwrap();
        let oracle = dense_reference_eigs(&a, &m, 5).unwrap();
        for (g, o) in got.values.iter().zip(&oracle.values) {
            assert!((g - o).abs() < 1e-7 * o.abs().max(1e-3), "{g} vs {o}");
        }
        // Rayleigh-quotient consistency.
        let mut tmp = vec![0.0; n];
        for (lam, u) in got.values.iter().zip(&got.vectors) {
            let au = {
                let mut y = vec![0.0; n];
                a.matvec(u, &mut y);
                y
            };
            let num: f64 = u.iter().zip(&au).map(|(a, b)| a * b).sum();
            let den = m_dot(&m, u, u, &mut tmp);
            assert!((num / den - lam).abs() < 1e-9 * lam.abs().max(1.0));
        }
    }

    #[test]
    fn eigen_determinism() {
        let n = 30;
        let a = random_spd(n, 3);
        let m = SparseSymMatrix::identity(n);
        let r1 = solve_smallest_eigs(&a, &m, 3, 0x5EED).unwrap();
        let r2 = solve_smallest_eigs(&a, &m, 3, 0x5EED).unwrap();
        assert_eq!(r1.values, r2.values);
    }

    #[test]
    fn condition_estimates() {
        assert!((condition_estimate(&SparseSymMatrix::identity(5)).unwrap() - 1.0).abs() < 1e-6);
        let a = SparseSymMatrix::from_diagonal(&[1.0, 10.0]);
        let c = condition_estimate(&a).unwrap();
        assert!((c - 10.0).abs() < 0.5);
        let n = 40;
        let a = random_spd(n, 99);
        let got = condition_estimate(&a).unwrap();
        let ad = nalgebra::DMatrix::from_fn(n, n, |i, j| a.get(i, j));
        let eig = nalgebra::SymmetricEigen::new(ad);
        let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        let oracle = max / min;
        assert!(
            (got - oracle).abs() < 0.1 * oracle,
            "estimate {got} vs oracle {oracle}"
        );
    }

    #[test]
    fn zero_row_guard() {
        // One decoupled zero row: solve pins it, condition ignores it.
        let mut trip = vec![(0u32, 0u32, 2.0), (2, 2, 3.0), (0, 2, 1.0), (2, 0, 1.0)];
        trip.push((1, 1, 0.0));
        let a = SparseSymMatrix::from_triplets(3, trip);
        let rep = solve_source(&a, &[1.0, 0.0, 1.0]).unwrap();
        assert!(rep.rel_residual < 1e-14);
        assert_eq!(rep.x[1], 0.0);
        let c = condition_estimate(&a).unwrap();
        assert!(c.is_finite() && c > 1.0);
    }
}
