//! Dense complex linear algebra kernels.
//!
//! Everything spectral goes through [`eigh`], a Hermitian eigensolver with
//! ascending eigenvalues. SVD is only used for rectangular factors.

use faer::{c64, Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of the Hermitian part of `m`.
///
/// Eigenvalues are returned in ascending order and the columns of the
/// returned matrix are the matching orthonormal eigenvectors.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let evd = to_faer(&hermitian_part(m))
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigensolver converges on finite input");
    let raw: Vec<f64> = (0..n).map(|k| evd.S().column_vector()[k].re).collect();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let values = order.iter().map(|&k| raw[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| {
        let z = u[(i, order[j])];
        c(z.re, z.im)
    });
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = to_faer(&hermitian_part(m))
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("Hermitian eigensolver converges on finite input");
    v.sort_by(f64::total_cmp);
    v
}

fn to_faer(m: &CMatrix) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)].re, m[(i, j)].im))
}

/// Thin singular value decomposition `m = U diag(s) V†`.
///
/// `s` is descending; `U` is `r x k` and `V` is `c x k` with `k = min(r, c)`.
pub fn svd(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let (r, cl) = m.shape();
    let k = r.min(cl);
    if k == 0 {
        return (CMatrix::zeros(r, 0), Vec::new(), CMatrix::zeros(cl, 0));
    }
    let dec = to_faer(m).thin_svd().expect("SVD converges on finite input");
    let raw: Vec<f64> = (0..k).map(|j| dec.S().column_vector()[j].re).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
    let (fu, fv) = (dec.U(), dec.V());
    let u = CMatrix::from_fn(r, k, |i, j| {
        let z = fu[(i, order[j])];
        c(z.re, z.im)
    });
    let v = CMatrix::from_fn(cl, k, |i, j| {
        let z = fv[(i, order[j])];
        c(z.re, z.im)
    });
    (u, order.iter().map(|&j| raw[j]).collect(), v)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigvalsh(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMatrix) -> f64 {
    eigvalsh(m).last().copied().unwrap_or(0.0)
}

/// Rebuilds `V diag(f(λ)) V†`.
pub fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lam) in values.iter().enumerate() {
        let w = f(lam);
        if w == 0.0 {
            continue;
        }
        let col = vectors.column(k);
        out += (col * col.adjoint()).scale(w);
    }
    out
}

/// Nearest positive semidefinite matrix in Frobenius norm (eigenvalue clipping).
pub fn project_psd(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(m);
    spectral_map(&vals, &vecs, |l| l.max(0.0))
}

/// Nearest matrix with spectrum in `[lo, hi]`.
pub fn project_spectrum(m: &CMatrix, lo: f64, hi: f64) -> CMatrix {
    let (vals, vecs) = eigh(m);
    spectral_map(&vals, &vecs, |l| l.clamp(lo, hi))
}

pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(m);
    spectral_map(&vals, &vecs, |l| l.max(0.0).sqrt())
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().map(|l| l.abs()).sum()
}

pub fn op_norm_hermitian(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().fold(0.0_f64, |acc, l| acc.max(l.abs()))
}

/// Hermitian-ness defect relative to the matrix scale.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let scale = frobenius(m).max(1.0);
    frobenius(&(m - m.adjoint())) / scale
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn inner(u: &CVector, v: &CVector) -> C64 {
    u.dotc(v)
}

/// Moore-Penrose pseudo-inverse of a Hermitian matrix, dropping
/// eigenvalues below `tol * λ_max`.
pub fn pinv_hermitian(m: &CMatrix, tol: f64) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let lmax = vals.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
    let cut = tol * lmax.max(f64::MIN_POSITIVE);
    spectral_map(&vals, &vecs, |l| if l.abs() > cut { 1.0 / l } else { 0.0 })
}

/// Orthonormal basis for the column span of `m` (modified Gram-Schmidt with
/// reorthogonalisation). Columns whose residual norm falls below `tol`
/// times their original norm are dropped.
pub fn orthonormal_columns(m: &CMatrix, tol: f64) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::new();
    for j in 0..m.ncols() {
        let mut v: CVector = m.column(j).into_owned();
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let p = b.dotc(&v);
                v -= b * p;
            }
        }
        let n = v.norm();
        if n > tol * norm0 {
            basis.push(v / C64::from(n));
        }
    }
    basis
}

pub fn columns_to_matrix(cols: &[CVector], nrows: usize) -> CMatrix {
    let mut m = CMatrix::zeros(nrows, cols.len());
    for (j, col) in cols.iter().enumerate() {
        m.set_column(j, col);
    }
    m
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s = to_faer(m).singular_values().expect("SVD converges on finite input");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Reshape a vector of length `rows*cols` (row-major multi-index) into a matrix.
pub fn matricize(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

pub fn vectorize(m: &CMatrix) -> CVector {
    let (r, cl) = m.shape();
    CVector::from_fn(r * cl, |k, _| m[(k / cl, k % cl)])
}

pub fn basis_vector(dim: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[k] = ONE;
    v
}

pub fn random_complex_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
}

pub fn random_complex_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = random_complex_matrix(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    hermitian_part(&random_complex_matrix(rng, n, n))
}

/// Random unit-trace density matrix of the given rank (Ginibre ensemble).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    let g = random_complex_matrix(rng, n, rank.max(1));
    let m = &g * g.adjoint();
    let t = m.trace().re;
    m.unscale(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigh_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, 6);
        let (vals, vecs) = eigh(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let back = spectral_map(&vals, &vecs, |l| l);
        assert!(frobenius(&(back - &h)) < 1e-12);
    }

    #[test]
    fn psd_projection_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_hermitian(&mut rng, 5);
        let p = project_psd(&h);
        assert!(min_eigenvalue(&p) > -1e-12);
        assert!(frobenius(&(project_psd(&p) - &p)) < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(&mut rng, 4);
        let id = CMatrix::identity(4, 4);
        assert!(frobenius(&(u.adjoint() * &u - id)) < 1e-12);
    }

    #[test]
    fn pinv_of_rank_deficient() {
        let v = CVector::from_vec(vec![ONE, ONE]);
        let m = outer(&v);
        let p = pinv_hermitian(&m, 1e-12);
        assert!(frobenius(&(&m * &p * &m - &m)) < 1e-12);
    }
}
