//! Dense linear-algebra kernel: row-major matrices, pivoted Householder QR,
//! minimum-norm least squares, projections, and symmetric eigenvalues.
//!
//! Everything here targets desk-scale problems (tens of rows and columns),
//! where a rank-revealing QR and a cyclic Jacobi sweep are accurate and more
//! than fast enough. Rank decisions use a relative cutoff against the
//! dominant eigenvalue / leading pivot; tolerances are exposed as constants
//! or parameters.
//!
//! For reference: the A-norm `‖x‖_A = √(xᵀAx)` of a positive semidefinite
//! matrix shows up in convergence analyses of the solvers built on top of
//! this module; it is documented here only and not consumed by any routine.

use serde::Serialize;

use crate::error::Error;

/// Relative cutoff below which an eigenvalue of a Gram matrix counts as zero.
pub const RANK_CUTOFF_REL: f64 = 1e-10;

/// Relative cutoff on QR pivot magnitudes for rank decisions.
pub const QR_RANK_REL: f64 = 1e-10;

/// Default relative tolerance for membership of a vector in a range space.
pub const RANGE_TOL: f64 = 1e-8;

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Dense row-major matrix of 64-bit reals. All entries are finite; the
/// checked constructors enforce this.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, Error> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                context: "DenseMatrix data length",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "DenseMatrix entries",
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, Error> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Precondition {
                context: "DenseMatrix::from_rows",
                detail: "ragged rows".into(),
            });
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// `A x`; panics on a length mismatch.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ x`; panics on a length mismatch.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "tr_matvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi != 0.0 {
                for (j, &a) in self.row(i).iter().enumerate() {
                    out[j] += a * xi;
                }
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik != 0.0 {
                    for j in 0..other.cols {
                        out.data[i * other.cols + j] += aik * other.get(k, j);
                    }
                }
            }
        }
        out
    }

    /// The Gram matrix `AᵀA`.
    pub fn gram(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.cols);
        for j in 0..self.cols {
            for k in j..self.cols {
                let mut acc = 0.0;
                for i in 0..self.rows {
                    acc += self.get(i, j) * self.get(i, k);
                }
                out.set(j, k, acc);
                out.set(k, j, acc);
            }
        }
        out
    }

    /// New matrix made of the selected columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, idx.len());
        for (jj, &j) in idx.iter().enumerate() {
            for i in 0..self.rows {
                out.set(i, jj, self.get(i, j));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }
}

/// Householder QR factorization with optional column pivoting.
///
/// Stores the reflectors in the factored block; `least_squares_min_norm`
/// completes it to a complete orthogonal decomposition so rank-deficient
/// systems get the pseudo-inverse (minimum-norm) solution.
pub struct QrFactor {
    qr: DenseMatrix,
    betas: Vec<f64>,
    piv: Vec<usize>,
    steps: usize,
    rank: usize,
}

impl QrFactor {
    pub fn factor(a: &DenseMatrix, pivot: bool) -> Self {
        let m = a.rows();
        let n = a.cols();
        let kmax = m.min(n);
        let mut qr = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut betas = vec![0.0; kmax];
        let mut rank = 0;
        let mut steps = 0;
        let mut leading = 0.0f64;

        for k in 0..kmax {
            if pivot {
                let mut best = k;
                let mut best_norm = -1.0;
                for j in k..n {
                    let mut s = 0.0;
                    for i in k..m {
                        let v = qr.get(i, j);
                        s += v * v;
                    }
                    if s > best_norm {
                        best_norm = s;
                        best = j;
                    }
                }
                if best != k {
                    for i in 0..m {
                        let tmp = qr.get(i, k);
                        qr.set(i, k, qr.get(i, best));
                        qr.set(i, best, tmp);
                    }
                    piv.swap(k, best);
                }
            }

            let mut sigma_sq = 0.0;
            for i in k..m {
                let v = qr.get(i, k);
                sigma_sq += v * v;
            }
            let sigma = sigma_sq.sqrt();
            if k == 0 {
                leading = sigma;
            }
            if sigma <= leading * QR_RANK_REL || sigma == 0.0 {
                // Remaining block is numerically zero under pivoting; without
                // pivoting only this column is skipped.
                if pivot {
                    break;
                }
                betas[k] = 0.0;
                steps = k + 1;
                continue;
            }

            let x0 = qr.get(k, k);
            let alpha = if x0 >= 0.0 { -sigma } else { sigma };
            let v0 = x0 - alpha;
            // Reflector w with w[0] = 1, tail stored below the diagonal.
            let beta = -v0 / alpha; // 2 v0² / (v0² + Σ tail²) simplified
            for i in k + 1..m {
                qr.set(i, k, qr.get(i, k) / v0);
            }
            qr.set(k, k, alpha);
            betas[k] = beta;

            for j in k + 1..n {
                let mut s = qr.get(k, j);
                for i in k + 1..m {
                    s += qr.get(i, k) * qr.get(i, j);
                }
                let s = s * beta;
                if s != 0.0 {
                    let top = qr.get(k, j) - s;
                    qr.set(k, j, top);
                    for i in k + 1..m {
                        qr.set(i, j, qr.get(i, j) - s * qr.get(i, k));
                    }
                }
            }
            rank = k + 1;
            steps = k + 1;
        }

        Self {
            qr,
            betas,
            piv,
            steps,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `y := Qᵀ y` in place.
    pub fn apply_qt(&self, y: &mut [f64]) {
        let m = self.qr.rows();
        assert_eq!(y.len(), m);
        for k in 0..self.steps {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let mut s = y[k];
            for i in k + 1..m {
                s += self.qr.get(i, k) * y[i];
            }
            let s = s * beta;
            y[k] -= s;
            for i in k + 1..m {
                y[i] -= s * self.qr.get(i, k);
            }
        }
    }

    /// `y := Q y` in place.
    pub fn apply_q(&self, y: &mut [f64]) {
        let m = self.qr.rows();
        assert_eq!(y.len(), m);
        for k in (0..self.steps).rev() {
            let beta = self.betas[k];
            if beta == 0.0 {
                continue;
            }
            let mut s = y[k];
            for i in k + 1..m {
                s += self.qr.get(i, k) * y[i];
            }
            let s = s * beta;
            y[k] -= s;
            for i in k + 1..m {
                y[i] -= s * self.qr.get(i, k);
            }
        }
    }

    /// Solve a square full-rank system `A x = b`; `None` when rank-deficient.
    pub fn square_solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.qr.cols();
        if self.qr.rows() != n || self.rank < n {
            return None;
        }
        let mut y = b.to_vec();
        self.apply_qt(&mut y);
        let mut xp = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.qr.get(i, j) * xp[j];
            }
            xp[i] = s / self.qr.get(i, i);
        }
        let mut x = vec![0.0; n];
        for j in 0..n {
            x[self.piv[j]] = xp[j];
        }
        Some(x)
    }

    /// Minimum-norm least-squares solution of `A x ≈ b` via a complete
    /// orthogonal decomposition of the rank-revealing factorization.
    pub fn least_squares_min_norm(&self, b: &[f64]) -> Vec<f64> {
        let n = self.qr.cols();
        let r = self.rank;
        if r == 0 {
            return vec![0.0; n];
        }
        let mut y = b.to_vec();
        self.apply_qt(&mut y);

        // R1 is the leading r×n block in permuted column order.
        let mut r1t = DenseMatrix::zeros(n, r);
        for i in 0..r {
            for j in i..n {
                r1t.set(j, i, self.qr.get(i, j));
            }
        }
        let f2 = QrFactor::factor(&r1t, false);
        // R1ᵀ = Q2 R2, so R1 zp = c becomes R2ᵀ w = c, zp = Q2 [w; 0].
        let mut w = vec![0.0; r];
        for i in 0..r {
            let mut s = y[i];
            for j in 0..i {
                s -= f2.qr.get(j, i) * w[j];
            }
            w[i] = s / f2.qr.get(i, i);
        }
        let mut zp = vec![0.0; n];
        zp[..r].copy_from_slice(&w);
        f2.apply_q(&mut zp);

        let mut x = vec![0.0; n];
        for j in 0..n {
            x[self.piv[j]] = zp[j];
        }
        x
    }

    /// Solve `(AᵀA) z = rhs` from the stored triangular factor: with
    /// `A P = Q R` this is `RᵀR (Pᵀz) = Pᵀ rhs`, two triangular solves.
    /// `None` when `A` is column-rank-deficient.
    pub fn gram_solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.qr.cols();
        if self.rank < n || rhs.len() != n {
            return None;
        }
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut s = rhs[self.piv[i]];
            for j in 0..i {
                s -= self.qr.get(j, i) * w[j];
            }
            w[i] = s / self.qr.get(i, i);
        }
        let mut zp = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = w[i];
            for j in i + 1..n {
                s -= self.qr.get(i, j) * zp[j];
            }
            zp[i] = s / self.qr.get(i, i);
        }
        let mut z = vec![0.0; n];
        for j in 0..n {
            z[self.piv[j]] = zp[j];
        }
        Some(z)
    }
}

/// Orthogonal projection of `v` onto the span of the columns of `cols`.
/// An empty or all-zero column set projects to the zero vector.
pub fn project_onto_span(cols: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>, Error> {
    if v.len() != cols.rows() {
        return Err(Error::Dimension {
            context: "project_onto_span vector length",
            expected: cols.rows(),
            actual: v.len(),
        });
    }
    if cols.cols() == 0 {
        return Ok(vec![0.0; v.len()]);
    }
    let f = QrFactor::factor(cols, true);
    let mut y = v.to_vec();
    f.apply_qt(&mut y);
    for yi in y.iter_mut().skip(f.rank()) {
        *yi = 0.0;
    }
    f.apply_q(&mut y);
    Ok(y)
}

/// Minimizer of `‖A x − b‖₂` with minimum Euclidean norm.
pub fn least_squares_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, Error> {
    if b.len() != a.rows() {
        return Err(Error::Dimension {
            context: "least_squares_solve rhs length",
            expected: a.rows(),
            actual: b.len(),
        });
    }
    Ok(QrFactor::factor(a, true).least_squares_min_norm(b))
}

/// Extremal eigenvalues of `AᵀA` and their ratio. `lambda_min` is the
/// smallest eigenvalue above the relative rank cutoff, i.e. the smallest
/// nonzero one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub kappa: f64,
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
pub fn symmetric_eigenvalues(g: &DenseMatrix, max_sweeps: usize) -> Result<Vec<f64>, Error> {
    let n = g.rows();
    assert_eq!(g.cols(), n, "symmetric_eigenvalues needs a square matrix");
    let mut a = g.clone();
    let fro_sq: f64 = a.data().iter().map(|v| v * v).sum();
    if fro_sq == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let tol_sq = fro_sq * 1e-28;

    for _ in 0..max_sweeps {
        let mut off_sq = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                let v = a.get(p, q);
                off_sq += 2.0 * v * v;
            }
        }
        if off_sq <= tol_sq {
            let mut eigs: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
            eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(eigs);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    Err(Error::EigenDivergence { sweeps: max_sweeps })
}

/// Spectral summary of `AᵀA` for a nonzero matrix `A`.
///
/// The nonzero eigenvalues of `AᵀA` and `AAᵀ` coincide, so the smaller Gram
/// matrix is factored.
pub fn spectral_summary(a: &DenseMatrix) -> Result<SpectralSummary, Error> {
    if a.max_abs() == 0.0 {
        return Err(Error::Precondition {
            context: "spectral_summary",
            detail: "matrix is identically zero".into(),
        });
    }
    let g = if a.rows() <= a.cols() {
        a.transpose().gram() // A Aᵀ
    } else {
        a.gram()
    };
    let eigs = symmetric_eigenvalues(&g, 64)?;
    let lambda_max = eigs.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = RANK_CUTOFF_REL * lambda_max;
    let lambda_min = eigs
        .iter()
        .copied()
        .filter(|&e| e > cutoff)
        .fold(f64::INFINITY, f64::min);
    Ok(SpectralSummary {
        lambda_max,
        lambda_min,
        kappa: lambda_max / lambda_min,
    })
}

/// The vector `v ∈ range(A)` with `Aᵀ v = u`, i.e. `(Aᵀ)⁺ u`. Errors when
/// `u` lies outside `range(Aᵀ)` beyond the given relative tolerance.
pub fn pseudo_inverse_apply_with(
    a: &DenseMatrix,
    u: &[f64],
    tol: f64,
) -> Result<Vec<f64>, Error> {
    if u.len() != a.cols() {
        return Err(Error::Dimension {
            context: "pseudo_inverse_apply input length",
            expected: a.cols(),
            actual: u.len(),
        });
    }
    // The minimum-norm least-squares solution of Aᵀ v = u is orthogonal to
    // null(Aᵀ), hence in range(A).
    let at = a.transpose();
    let v = QrFactor::factor(&at, true).least_squares_min_norm(u);
    let back = at.matvec(&v);
    let res: f64 = norm2(&back.iter().zip(u).map(|(x, y)| x - y).collect::<Vec<_>>());
    let bound = tol * norm2(u).max(1.0);
    if res > bound {
        return Err(Error::RangeMismatch {
            residual: res,
            tolerance: bound,
        });
    }
    Ok(v)
}

/// [`pseudo_inverse_apply_with`] at the default range tolerance.
pub fn pseudo_inverse_apply(a: &DenseMatrix, u: &[f64]) -> Result<Vec<f64>, Error> {
    pseudo_inverse_apply_with(a, u, RANGE_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(rows: Vec<Vec<f64>>) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn rejects_non_finite_entries() {
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn projects_onto_coordinate_plane() {
        let cols = mat(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]);
        let p = project_onto_span(&cols, &[1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(p[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(p[1], 1.0, max_relative = 1e-12);
        assert!(p[2].abs() < 1e-12);
    }

    #[test]
    fn empty_column_set_projects_to_zero() {
        let cols = DenseMatrix::zeros(3, 0);
        let p = project_onto_span(&cols, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn least_squares_recovers_mean() {
        let a = mat(vec![vec![1.0], vec![1.0]]);
        let x = least_squares_solve(&a, &[0.0, 2.0]).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn least_squares_underdetermined_is_exact_and_min_norm() {
        let a = mat(vec![
            vec![1.0, 0.0, 2.0 / 3.0],
            vec![0.0, 1.0, 2.0 / 3.0],
        ]);
        let b = [0.1, 0.4];
        let x = least_squares_solve(&a, &b).unwrap();
        let ax = a.matvec(&x);
        assert!(norm_inf(&[ax[0] - b[0], ax[1] - b[1]]) < 1e-12);
        // Minimum-norm solutions lie in range(Aᵀ).
        let xr = project_onto_span(&a.transpose(), &x).unwrap();
        for (xi, xri) in x.iter().zip(&xr) {
            assert_relative_eq!(xi, xri, epsilon = 1e-12);
        }
    }

    #[test]
    fn square_solve_detects_singularity() {
        let a = mat(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(QrFactor::factor(&a, true).square_solve(&[1.0, 1.0]).is_none());
        let a = mat(vec![vec![2.0, 0.0], vec![0.0, 4.0]]);
        let x = QrFactor::factor(&a, true).square_solve(&[2.0, 8.0]).unwrap();
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(x[1], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn spectral_summary_of_identity() {
        let s = spectral_summary(&DenseMatrix::identity(3)).unwrap();
        assert_relative_eq!(s.lambda_max, 1.0, max_relative = 1e-12);
        assert_relative_eq!(s.lambda_min, 1.0, max_relative = 1e-12);
        assert_relative_eq!(s.kappa, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn spectral_summary_squares_singular_values() {
        let a = mat(vec![vec![2.0, 0.0], vec![0.0, 1.0]]);
        let s = spectral_summary(&a).unwrap();
        assert_relative_eq!(s.lambda_max, 4.0, max_relative = 1e-10);
        assert_relative_eq!(s.lambda_min, 1.0, max_relative = 1e-10);
        assert_relative_eq!(s.kappa, 4.0, max_relative = 1e-10);
    }

    #[test]
    fn spectral_summary_skips_null_directions() {
        // Rank-1 wide matrix: AᵀA has nonzero eigenvalue 2 and a zero.
        let a = mat(vec![vec![1.0, 1.0]]);
        let s = spectral_summary(&a).unwrap();
        assert_relative_eq!(s.lambda_max, 2.0, max_relative = 1e-10);
        assert_relative_eq!(s.lambda_min, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn zero_matrix_is_rejected() {
        assert!(spectral_summary(&DenseMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn pseudo_inverse_apply_on_rank_one() {
        let a = mat(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let v = pseudo_inverse_apply(&a, &[5.0, 0.0]).unwrap();
        assert_relative_eq!(v[0], 5.0, max_relative = 1e-10);
        assert!(v[1].abs() < 1e-10);
    }

    #[test]
    fn pseudo_inverse_apply_rejects_out_of_range() {
        let a = mat(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        // (0, 1) is not in range(Aᵀ) = span{e₁}.
        assert!(matches!(
            pseudo_inverse_apply(&a, &[0.0, 1.0]),
            Err(Error::RangeMismatch { .. })
        ));
    }

    #[test]
    fn jacobi_matches_known_two_by_two() {
        let g = mat(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        let e = symmetric_eigenvalues(&g, 64).unwrap();
        assert_relative_eq!(e[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(e[1], 3.0, max_relative = 1e-12);
    }
}
