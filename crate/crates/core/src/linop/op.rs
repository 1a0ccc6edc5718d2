use std::sync::Arc;

use faer::{c64, Col, Mat, MatRef, Side};

use super::space::BasisSpace;
use super::spectrum::{Spectrum, DEFAULT_MERGE_TOL};
use crate::error::{Error, Result};

/// Largest dimension for which a dense matrix is allocated.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Absolute bound on max|A − A†| for an operator flagged Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub(crate) fn check_cap(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        Err(Error::DimensionCap { dim, cap })
    } else {
        Ok(())
    }
}

/// A dense operator on a labelled finite basis.
#[derive(Debug, Clone)]
pub struct LinOp {
    space: Arc<BasisSpace>,
    mat: Mat<c64>,
    hermitian: bool,
}

fn same_space(a: &Arc<BasisSpace>, b: &Arc<BasisSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn ensure_same(a: &LinOp, b: &LinOp, what: &str) -> Result<()> {
    if same_space(&a.space, &b.space) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch(format!("{what}: {} vs {}", a.space, b.space)))
    }
}

fn is_zero(z: c64) -> bool {
    z.re == 0.0 && z.im == 0.0
}

fn nnz(m: MatRef<'_, c64>) -> usize {
    let mut k = 0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !is_zero(m[(i, j)]) {
                k += 1;
            }
        }
    }
    k
}

/// Matrix product that skips structural zeros when either factor is sparse.
pub fn matmul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let (n, k, m) = (a.nrows(), a.ncols(), b.ncols());
    assert_eq!(k, b.nrows(), "inner dimensions differ");
    let dense_a = n * k;
    let dense_b = k * m;
    let nnz_a = nnz(a);
    if nnz_a * 8 < dense_a {
        let cols: Vec<Vec<(usize, c64)>> = (0..k)
            .map(|l| (0..n).filter(|&i| !is_zero(a[(i, l)])).map(|i| (i, a[(i, l)])).collect())
            .collect();
        let mut out = Mat::zeros(n, m);
        for j in 0..m {
            for (l, col) in cols.iter().enumerate() {
                let s = b[(l, j)];
                if is_zero(s) {
                    continue;
                }
                for &(i, v) in col {
                    out[(i, j)] += v * s;
                }
            }
        }
        return out;
    }
    if nnz(b) * 8 < dense_b {
        let mut out = Mat::zeros(n, m);
        for j in 0..m {
            for l in 0..k {
                let s = b[(l, j)];
                if is_zero(s) {
                    continue;
                }
                for i in 0..n {
                    out[(i, j)] += a[(i, l)] * s;
                }
            }
        }
        return out;
    }
    a * b
}

/// max |A_ij − conj(A_ji)|.
pub fn hermitian_defect(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// max |A_ij + conj(A_ji)|.
fn anti_hermitian_defect(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((m[(i, j)] + m[(j, i)].conj()).norm());
        }
    }
    worst
}

impl LinOp {
    pub fn zeros(space: &Arc<BasisSpace>) -> Result<Self> {
        let n = space.dim();
        check_cap(n, DEFAULT_DIM_CAP)?;
        Ok(LinOp { space: Arc::clone(space), mat: Mat::zeros(n, n), hermitian: true })
    }

    pub fn identity(space: &Arc<BasisSpace>) -> Result<Self> {
        let n = space.dim();
        check_cap(n, DEFAULT_DIM_CAP)?;
        Ok(LinOp { space: Arc::clone(space), mat: Mat::identity(n, n), hermitian: true })
    }

    pub fn diagonal(space: &Arc<BasisSpace>, diag: &[f64]) -> Result<Self> {
        let n = space.dim();
        if diag.len() != n {
            return Err(Error::contract(format!("diagonal has {} entries, space has {n}", diag.len())));
        }
        check_cap(n, DEFAULT_DIM_CAP)?;
        let mut mat = Mat::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = c64::new(d, 0.0);
        }
        Ok(LinOp { space: Arc::clone(space), mat, hermitian: true })
    }

    pub fn from_fn(space: &Arc<BasisSpace>, f: impl Fn(usize, usize) -> c64) -> Result<Self> {
        let n = space.dim();
        check_cap(n, DEFAULT_DIM_CAP)?;
        Self::from_mat(space, Mat::from_fn(n, n, f))
    }

    /// Wraps a matrix; the Hermitian flag is set when max|A − A†| ≤ 1e−12.
    pub fn from_mat(space: &Arc<BasisSpace>, mat: Mat<c64>) -> Result<Self> {
        let n = space.dim();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::SpaceMismatch(format!(
                "matrix is {}x{}, space {space} has dim {n}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        check_cap(n, DEFAULT_DIM_CAP)?;
        let hermitian = hermitian_defect(mat.as_ref()) <= HERMITIAN_TOL;
        Ok(LinOp { space: Arc::clone(space), mat, hermitian })
    }

    /// Like [`LinOp::from_mat`] but fails unless the matrix is Hermitian.
    pub fn hermitian_from_mat(space: &Arc<BasisSpace>, mat: Mat<c64>) -> Result<Self> {
        let op = Self::from_mat(space, mat)?;
        if !op.hermitian {
            return Err(Error::contract(format!(
                "matrix is not Hermitian (defect {:e})",
                op.hermitian_defect()
            )));
        }
        Ok(op)
    }

    pub fn space(&self) -> &Arc<BasisSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn mat(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.mat
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(self.mat.as_ref())
    }

    pub fn entry(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    pub fn adjoint(&self) -> LinOp {
        LinOp {
            space: Arc::clone(&self.space),
            mat: self.mat.adjoint().to_owned(),
            hermitian: self.hermitian,
        }
    }

    /// (A + A†)/2, exactly Hermitian.
    pub fn hermitian_part(&self) -> LinOp {
        let n = self.dim();
        let m = &self.mat;
        let mat = Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
        LinOp { space: Arc::clone(&self.space), mat, hermitian: true }
    }

    /// (A − A†)/(2i), exactly Hermitian.
    pub fn skew_part(&self) -> LinOp {
        let n = self.dim();
        let m = &self.mat;
        let half_over_i = c64::new(0.0, -0.5);
        let mat = Mat::from_fn(n, n, |i, j| (m[(i, j)] - m[(j, i)].conj()) * half_over_i);
        LinOp { space: Arc::clone(&self.space), mat, hermitian: true }
    }

    pub fn add(&self, other: &LinOp) -> Result<LinOp> {
        ensure_same(self, other, "add")?;
        Ok(LinOp {
            space: Arc::clone(&self.space),
            mat: &self.mat + &other.mat,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn sub(&self, other: &LinOp) -> Result<LinOp> {
        ensure_same(self, other, "sub")?;
        Ok(LinOp {
            space: Arc::clone(&self.space),
            mat: &self.mat - &other.mat,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    /// self ∘ other.
    pub fn compose(&self, other: &LinOp) -> Result<LinOp> {
        ensure_same(self, other, "compose")?;
        let mat = matmul(self.mat.as_ref(), other.mat.as_ref());
        let hermitian = hermitian_defect(mat.as_ref()) <= HERMITIAN_TOL;
        Ok(LinOp { space: Arc::clone(&self.space), mat, hermitian })
    }

    pub fn scale(&self, c: c64) -> LinOp {
        let n = self.dim();
        let mat = Mat::from_fn(n, n, |i, j| self.mat[(i, j)] * c);
        LinOp { space: Arc::clone(&self.space), mat, hermitian: self.hermitian && c.im == 0.0 }
    }

    pub fn scale_real(&self, c: f64) -> LinOp {
        self.scale(c64::new(c, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut m: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                m = m.max(self.mat[(i, j)].norm());
            }
        }
        m
    }

    pub fn max_abs_diff(&self, other: &LinOp) -> Result<f64> {
        ensure_same(self, other, "compare")?;
        let n = self.dim();
        let mut m: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                m = m.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        Ok(m)
    }

    pub fn is_finite(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| self.mat[(i, j)].re.is_finite() && self.mat[(i, j)].im.is_finite()))
    }

    /// P_K A P_K where K is the set of indices with `keep[i]`.
    pub fn compress(&self, keep: &[bool]) -> Result<LinOp> {
        let n = self.dim();
        if keep.len() != n {
            return Err(Error::contract("mask length differs from dimension"));
        }
        let mat = Mat::from_fn(n, n, |i, j| if keep[i] && keep[j] { self.mat[(i, j)] } else { c64::new(0.0, 0.0) });
        Ok(LinOp { space: Arc::clone(&self.space), mat, hermitian: self.hermitian })
    }

    /// Rows `rows` and columns `cols` as a fresh matrix.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Mat<c64> {
        Mat::from_fn(rows.len(), cols.len(), |i, j| self.mat[(rows[i], cols[j])])
    }

    /// Transports the operator into `target` along the isometry
    /// e_i ↦ e_{map[i]}; everything off the image is zero.
    pub fn embed(&self, target: &Arc<BasisSpace>, map: &[usize]) -> Result<LinOp> {
        let n = self.dim();
        if map.len() != n {
            return Err(Error::contract("embedding map length differs from dimension"));
        }
        let m = target.dim();
        check_cap(m, DEFAULT_DIM_CAP)?;
        let mut seen = vec![false; m];
        for &k in map {
            if k >= m || seen[k] {
                return Err(Error::contract("embedding map is not injective into the target"));
            }
            seen[k] = true;
        }
        let mut mat = Mat::zeros(m, m);
        for j in 0..n {
            for i in 0..n {
                mat[(map[i], map[j])] = self.mat[(i, j)];
            }
        }
        Ok(LinOp { space: Arc::clone(target), mat, hermitian: self.hermitian })
    }

    /// Applies the operator to a column vector.
    pub fn apply(&self, v: &Col<c64>) -> Result<Col<c64>> {
        if v.nrows() != self.dim() {
            return Err(Error::contract("vector length differs from dimension"));
        }
        Ok(&self.mat * v)
    }
}

/// Kronecker product of raw matrices.
pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Mat::zeros(ar * br, ac * bc);
    for ja in 0..ac {
        for ia in 0..ar {
            let s = a[(ia, ja)];
            if s == c64::new(0.0, 0.0) {
                continue;
            }
            for jb in 0..bc {
                for ib in 0..br {
                    out[(ia * br + ib, ja * bc + jb)] = s * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// A ⊗ B on the product space (left index major).
pub fn tensor(a: &LinOp, b: &LinOp) -> Result<LinOp> {
    let space = BasisSpace::product(a.space(), b.space())?;
    check_cap(space.dim(), DEFAULT_DIM_CAP)?;
    let mat = kron(a.mat(), b.mat());
    Ok(LinOp { space, mat, hermitian: a.hermitian && b.hermitian })
}

/// [A, B] = AB − BA.
pub fn commutator(a: &LinOp, b: &LinOp) -> Result<LinOp> {
    ensure_same(a, b, "commutator")?;
    let mat = matmul(a.mat(), b.mat()) - matmul(b.mat(), a.mat());
    let hermitian = hermitian_defect(mat.as_ref()) <= HERMITIAN_TOL;
    Ok(LinOp { space: Arc::clone(&a.space), mat, hermitian })
}

fn check_finite(m: MatRef<'_, c64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::contract("operator has non-finite entries"));
            }
        }
    }
    Ok(())
}

fn hermitian_eigvals(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))
}

/// Spectral norm of a square or rectangular matrix.
pub fn opnorm_mat(m: MatRef<'_, c64>) -> Result<f64> {
    check_finite(m)?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let scale = {
        let mut s: f64 = 0.0;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                s = s.max(m[(i, j)].norm());
            }
        }
        s
    };
    if scale == 0.0 {
        return Ok(0.0);
    }
    let tol = HERMITIAN_TOL * scale.max(1.0);
    if m.nrows() == m.ncols() {
        if hermitian_defect(m) <= tol {
            let ev = hermitian_eigvals(m)?;
            return Ok(ev.iter().fold(0.0, |a, v| a.max(v.abs())));
        }
        if anti_hermitian_defect(m) <= tol {
            let n = m.nrows();
            let im = Mat::from_fn(n, n, |i, j| m[(i, j)] * c64::new(0.0, 1.0));
            let ev = hermitian_eigvals(im.as_ref())?;
            return Ok(ev.iter().fold(0.0, |a, v| a.max(v.abs())));
        }
    }
    let mh = m.adjoint().to_owned();
    let gram = if m.ncols() <= m.nrows() { matmul(mh.as_ref(), m) } else { matmul(m, mh.as_ref()) };
    let ev = hermitian_eigvals(gram.as_ref())?;
    Ok(ev.iter().fold(0.0f64, |a, &v| a.max(v)).max(0.0).sqrt())
}

/// Spectral norm ‖A‖.
pub fn opnorm(a: &LinOp) -> Result<f64> {
    opnorm_mat(a.mat())
}

/// Largest singular value with unit vectors u, v such that A v = σ u.
pub fn top_singular_triplet(m: MatRef<'_, c64>) -> Result<(f64, Col<c64>, Col<c64>)> {
    check_finite(m)?;
    let mh = m.adjoint().to_owned();
    let gram = matmul(mh.as_ref(), m);
    let evd = gram
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    let n = m.ncols();
    let v: Col<c64> = evd.U().col(n - 1).to_owned();
    let av = m * &v;
    let sigma = av.norm_l2();
    let u = if sigma > 0.0 {
        Col::from_fn(av.nrows(), |i| av[i] / sigma)
    } else {
        Col::from_fn(m.nrows(), |i| if i == 0 { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
    };
    Ok((sigma, u, v))
}

/// Options for [`eig_hermitian_with`].
#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    pub merge_tol: f64,
    pub dim_cap: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions { merge_tol: DEFAULT_MERGE_TOL, dim_cap: DEFAULT_DIM_CAP }
    }
}

pub fn eig_hermitian(a: &LinOp) -> Result<Spectrum> {
    eig_hermitian_with(a, &EigOptions::default())
}

pub fn eig_hermitian_with(a: &LinOp, opts: &EigOptions) -> Result<Spectrum> {
    check_cap(a.dim(), opts.dim_cap)?;
    if !a.hermitian {
        return Err(Error::contract(format!(
            "eigen-decomposition requires a Hermitian operator (defect {:e})",
            a.hermitian_defect()
        )));
    }
    check_finite(a.mat())?;
    let ev = hermitian_eigvals(a.mat())?;
    Spectrum::from_values(ev, opts.merge_tol)
}

/// Ascending eigenvalues and orthonormal eigenvectors (as columns).
pub fn eigh(a: &LinOp) -> Result<(Vec<f64>, Mat<c64>)> {
    if !a.hermitian {
        return Err(Error::contract("eigen-decomposition requires a Hermitian operator"));
    }
    check_finite(a.mat())?;
    let evd = a
        .mat()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    let values = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((values, evd.U().to_owned()))
}

/// Assembles a square grid of blocks on the direct sum of the diagonal
/// summand spaces. `None` stands for a zero block.
pub fn block(grid: &[Vec<Option<&LinOp>>]) -> Result<LinOp> {
    let n = grid.len();
    if n == 0 || grid.iter().any(|row| row.len() != n) {
        return Err(Error::contract("block grid must be square and non-empty"));
    }
    let mut summands: Vec<Arc<BasisSpace>> = Vec::with_capacity(n);
    for k in 0..n {
        let pick = grid[k][k]
            .or_else(|| (0..n).find_map(|j| grid[k][j]))
            .or_else(|| (0..n).find_map(|i| grid[i][k]));
        let Some(op) = pick else {
            return Err(Error::contract(format!("block row/column {k} is entirely zero")));
        };
        summands.push(Arc::clone(op.space()));
    }
    for i in 0..n {
        for j in 0..n {
            if let Some(b) = grid[i][j] {
                if !same_space(b.space(), &summands[i]) || !same_space(b.space(), &summands[j]) {
                    return Err(Error::SpaceMismatch(format!("block ({i},{j}) does not fit its row/column")));
                }
            }
        }
    }
    let space = BasisSpace::direct_sum(summands.clone())?;
    check_cap(space.dim(), DEFAULT_DIM_CAP)?;
    let offsets: Vec<usize> = (0..n).map(|k| space.summand_offset(k).unwrap_or(0)).collect();
    let mut mat = Mat::zeros(space.dim(), space.dim());
    for i in 0..n {
        for j in 0..n {
            if let Some(b) = grid[i][j] {
                let d = b.dim();
                for c in 0..d {
                    for r in 0..d {
                        mat[(offsets[i] + r, offsets[j] + c)] = b.mat[(r, c)];
                    }
                }
            }
        }
    }
    let hermitian = hermitian_defect(mat.as_ref()) <= HERMITIAN_TOL;
    Ok(LinOp { space, mat, hermitian })
}

/// Block-diagonal operator on the direct sum of the operands' spaces.
pub fn direct_sum(ops: &[&LinOp]) -> Result<LinOp> {
    let n = ops.len();
    let grid: Vec<Vec<Option<&LinOp>>> =
        (0..n).map(|i| (0..n).map(|j| (i == j).then_some(ops[i])).collect()).collect();
    block(&grid)
}
