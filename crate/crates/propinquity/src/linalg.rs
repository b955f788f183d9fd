//! Dense numerical kernels: Hermitian eigenvalues by cyclic Jacobi rotations,
//! spectral norms via the Hermitian dilation, Gaussian elimination for ranks
//! and nullspaces, and a sparse real-linear-map type used by seminorm atoms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// Default absolute tolerance for structural checks.
pub const STRUCT_TOL: f64 = 1e-12;

/// Off-diagonal Frobenius mass target for the Jacobi sweep, relative to the
/// Frobenius norm of the input (absolute for inputs of norm at most one).
pub const JACOBI_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 64;

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    let n = a.nrows();
    if n != a.ncols() {
        return false;
    }
    for i in 0..n {
        for j in i..n {
            let d = a[(i, j)] - a[(j, i)].conj();
            if d.norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Maps the Hermitian matrix `X + iY` to the real symmetric `[[X, -Y], [Y, X]]`,
/// which has the same spectrum with every eigenvalue doubled in multiplicity.
fn realify_hermitian(a: &CMat) -> RMat {
    let n = a.nrows();
    let mut m = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            m[(i, j)] = z.re;
            m[(i, j + n)] = -z.im;
            m[(i + n, j)] = z.im;
            m[(i + n, j + n)] = z.re;
        }
    }
    m
}

fn off_diagonal_frobenius_sq(a: &RMat) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s
}

/// Cyclic Jacobi diagonalization of a real symmetric matrix.
///
/// Sweeps rotate every (p, q) pair in order until the off-diagonal Frobenius
/// mass drops below the tolerance. Deterministic; no external solver.
/// Returns the eigenvalues (diagonal, unsorted) and, when requested, the
/// matrix whose columns are the accumulated eigenvectors.
pub fn jacobi_symmetric(mut a: RMat, want_vectors: bool) -> (Vec<f64>, Option<RMat>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "jacobi_symmetric needs a square matrix");
    let mut v = if want_vectors {
        Some(RMat::identity(n, n))
    } else {
        None
    };
    if n <= 1 {
        let eig = (0..n).map(|i| a[(i, i)]).collect();
        return (eig, v);
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let target = (JACOBI_TOL * scale) * (JACOBI_TOL * scale);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_frobenius_sq(&a) <= target {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= JACOBI_TOL * scale / (n as f64) {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e12 {
                    // rotation angle underflows; first-order formula avoids overflow
                    1.0 / (2.0 * theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                let app = a[(p, p)];
                let aqq = a[(q, q)];
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[(r, p)];
                        let arq = a[(r, q)];
                        a[(r, p)] = arp - s * (arq + tau * arp);
                        a[(r, q)] = arq + s * (arp - tau * arq);
                        a[(p, r)] = a[(r, p)];
                        a[(q, r)] = a[(r, q)];
                    }
                }
                if let Some(v) = v.as_mut() {
                    for r in 0..n {
                        let vrp = v[(r, p)];
                        let vrq = v[(r, q)];
                        v[(r, p)] = vrp - s * (vrq + tau * vrp);
                        v[(r, q)] = vrq + s * (vrp - tau * vrq);
                    }
                }
            }
        }
    }
    let eig = (0..n).map(|i| a[(i, i)]).collect();
    (eig, v)
}

/// Eigenvalues of a Hermitian matrix (each reported once) by cyclic Jacobi on
/// the realified form. The realified spectrum repeats every eigenvalue twice;
/// the list returned here is the full doubled spectrum, which is what callers
/// scanning for extremes need.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    if a.nrows() == 1 {
        return vec![a[(0, 0)].re];
    }
    jacobi_symmetric(realify_hermitian(a), false).0
}

/// Eigenpair of largest absolute eigenvalue of a Hermitian matrix.
pub fn hermitian_top_eigenpair(a: &CMat) -> (f64, DVector<Complex64>) {
    let n = a.nrows();
    if n == 1 {
        return (
            a[(0, 0)].re,
            DVector::from_element(1, Complex64::new(1.0, 0.0)),
        );
    }
    let (eig, v) = jacobi_symmetric(realify_hermitian(a), true);
    let v = v.unwrap();
    let mut best = 0;
    for (i, l) in eig.iter().enumerate() {
        if l.abs() > eig[best].abs() {
            best = i;
        }
    }
    let mut w = DVector::from_element(n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        w[i] = Complex64::new(v[(i, best)], v[(i + n, best)]);
    }
    let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        w /= Complex64::new(norm, 0.0);
    }
    (eig[best], w)
}

/// Spectral norm of a square complex matrix.
///
/// Hermitian inputs use their own spectrum; general inputs go through the
/// Hermitian dilation `[[0, A], [A*, 0]]` whose extreme eigenvalues are the
/// singular values of `A`.
pub fn spectral_norm(a: &CMat) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 1 {
        return a[(0, 0)].norm();
    }
    if is_hermitian(a, STRUCT_TOL) {
        return hermitian_eigenvalues(a)
            .iter()
            .fold(0.0, |m, l| m.max(l.abs()));
    }
    let mut d = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            d[(i, j + n)] = a[(i, j)];
            d[(i + n, j)] = a[(j, i)].conj();
        }
    }
    hermitian_eigenvalues(&d)
        .iter()
        .fold(0.0, |m, l| m.max(l.abs()))
}

/// Row echelon reduction with partial pivoting; returns the pivot columns.
/// `mat` is reduced in place to (unnormalized) echelon form.
pub fn row_reduce(mat: &mut RMat, tol: f64) -> Vec<usize> {
    let (rows, cols) = (mat.nrows(), mat.ncols());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r >= rows {
            break;
        }
        // locate the largest entry in column c at or below row r
        let mut best = r;
        for i in r + 1..rows {
            if mat[(i, c)].abs() > mat[(best, c)].abs() {
                best = i;
            }
        }
        if mat[(best, c)].abs() <= tol {
            continue;
        }
        mat.swap_rows(r, best);
        let piv = mat[(r, c)];
        for i in 0..rows {
            if i != r && mat[(i, c)].abs() > 0.0 {
                let f = mat[(i, c)] / piv;
                for j in c..cols {
                    let v = mat[(r, j)];
                    mat[(i, j)] -= f * v;
                }
                mat[(i, c)] = 0.0;
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(mat: &RMat, tol: f64) -> usize {
    let mut m = mat.clone();
    row_reduce(&mut m, tol).len()
}

/// Orthonormal-ish basis of the nullspace of `mat` (columns of the result).
/// Built from the reduced echelon form; free columns parametrize the kernel.
pub fn nullspace(mat: &RMat, tol: f64) -> RMat {
    let cols = mat.ncols();
    let mut m = mat.clone();
    let pivots = row_reduce(&mut m, tol);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = RMat::zeros(cols, free.len());
    for (k, &fc) in free.iter().enumerate() {
        basis[(fc, k)] = 1.0;
        // back-substitute pivot coordinates
        for (r, &pc) in pivots.iter().enumerate() {
            let piv = m[(r, pc)];
            if piv.abs() > tol {
                basis[(pc, k)] = -m[(r, fc)] / piv;
            }
        }
        let norm = basis.column(k).norm();
        if norm > 0.0 {
            for i in 0..cols {
                basis[(i, k)] /= norm;
            }
        }
    }
    basis
}

/// Gram-Schmidt orthonormalization of the columns (assumed independent).
pub fn orthonormalize_columns(m: &RMat) -> RMat {
    let mut q = m.clone();
    for k in 0..q.ncols() {
        for prev in 0..k {
            let dot = q.column(k).dot(&q.column(prev));
            let col = q.column(prev).into_owned();
            for i in 0..q.nrows() {
                q[(i, k)] -= dot * col[i];
            }
        }
        let n = q.column(k).norm();
        if n > 1e-14 {
            for i in 0..q.nrows() {
                q[(i, k)] /= n;
            }
        }
    }
    q
}

/// A particular solution of `mat * x = b`, or `None` if inconsistent at `tol`.
pub fn solve_consistent(mat: &RMat, b: &RVec, tol: f64) -> Option<RVec> {
    let (rows, cols) = (mat.nrows(), mat.ncols());
    let mut aug = RMat::zeros(rows, cols + 1);
    aug.view_mut((0, 0), (rows, cols)).copy_from(mat);
    aug.view_mut((0, cols), (rows, 1)).copy_from(b);
    let pivots = row_reduce(&mut aug, tol);
    if pivots.contains(&cols) {
        return None; // pivot in the rhs column: inconsistent
    }
    let mut x = RVec::zeros(cols);
    for (r, &pc) in pivots.iter().enumerate() {
        x[pc] = aug[(r, cols)] / aug[(r, pc)];
    }
    Some(x)
}

/// A sparse real-linear map between coordinate spaces, stored as triplets.
///
/// Seminorm atoms keep their defining map in this form; most atoms touch only
/// a few coordinates per row (pair differences, phase conjugations), so dense
/// storage would be wasteful at fuzzy-torus sizes.
#[derive(Debug, Clone)]
pub struct LinMap {
    rows: usize,
    cols: usize,
    /// (row, col, value), sorted by row then col, no duplicates, no zeros.
    entries: Vec<(u32, u32, f64)>,
}

impl LinMap {
    pub fn from_triplets(rows: usize, cols: usize, mut entries: Vec<(u32, u32, f64)>) -> LinMap {
        entries.retain(|&(_, _, v)| v != 0.0);
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(u32, u32, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if let Some(last) = merged.last_mut() {
                if last.0 == r && last.1 == c {
                    last.2 += v;
                    continue;
                }
            }
            merged.push((r, c, v));
        }
        merged.retain(|&(_, _, v)| v != 0.0);
        LinMap {
            rows,
            cols,
            entries: merged,
        }
    }

    pub fn from_dense(m: &RMat) -> LinMap {
        let mut entries = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != 0.0 {
                    entries.push((r as u32, c as u32, v));
                }
            }
        }
        LinMap::from_triplets(m.nrows(), m.ncols(), entries)
    }

    pub fn identity(n: usize) -> LinMap {
        LinMap::from_triplets(n, n, (0..n).map(|i| (i as u32, i as u32, 1.0)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn scaled(&self, f: f64) -> LinMap {
        LinMap {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .map(|&(r, c, v)| (r, c, v * f))
                .collect(),
        }
    }

    pub fn apply(&self, x: &RVec) -> RVec {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = RVec::zeros(self.rows);
        for &(r, c, v) in &self.entries {
            y[r as usize] += v * x[c as usize];
        }
        y
    }

    /// Applies the transpose: pulls a functional on the target back to the source.
    pub fn tr_apply(&self, y: &RVec) -> RVec {
        debug_assert_eq!(y.len(), self.rows);
        let mut x = RVec::zeros(self.cols);
        for &(r, c, v) in &self.entries {
            x[c as usize] += v * y[r as usize];
        }
        x
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinMap) -> LinMap {
        assert_eq!(
            self.cols, inner.rows,
            "LinMap composition dimension mismatch"
        );
        // index inner entries by row
        let mut by_row: Vec<Vec<(u32, f64)>> = vec![Vec::new(); inner.rows];
        for &(r, c, v) in &inner.entries {
            by_row[r as usize].push((c, v));
        }
        let mut out = Vec::new();
        for &(r, k, v) in &self.entries {
            for &(c, w) in &by_row[k as usize] {
                out.push((r, c, v * w));
            }
        }
        LinMap::from_triplets(self.rows, inner.cols, out)
    }

    /// Difference `self - other` of maps with identical shapes.
    pub fn sub(&self, other: &LinMap) -> LinMap {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().map(|&(r, c, v)| (r, c, -v)));
        LinMap::from_triplets(self.rows, self.cols, entries)
    }

    pub fn to_dense(&self) -> RMat {
        let mut m = RMat::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.entries {
            m[(r as usize, c as usize)] = v;
        }
        m
    }
}
