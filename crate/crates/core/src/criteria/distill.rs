use super::{cut_indices, cut_labels, inverse_permutation, side_first, Certificate, Verdict};
use crate::error::{Error, Result};
use crate::hilbert::{partial_transpose_matrix, permute_matrix, permute_vector, StateMatrix};
use crate::linalg::{self, kron, matricize, random_complex_matrix, CMatrix, CVector};
use crate::rng::restart_rng;
use crate::tolerance::Tolerances;

const MAX_SWEEPS: usize = 1000;
const CONVERGED: f64 = 1e-12;

/// Schmidt coefficients (singular values, descending) of `v` across the cut
/// separating `side` from the remaining subsystems.
pub fn schmidt_coefficients(v: &CVector, dims: &[usize], side: &[usize]) -> Vec<f64> {
    let order = side_first(dims.len(), side);
    let da: usize = side.iter().map(|&k| dims[k]).product();
    let w = permute_vector(v, dims, &order);
    linalg::singular_values(&matricize(&w, da, w.len() / da))
}

/// Searches for a Schmidt-rank-two `|ψ⟩` with `⟨ψ|ρ^Γ|ψ⟩ < 0`.
///
/// Each restart alternates between the two sides: with a two-dimensional
/// subspace fixed on one side, the best vector is the lowest eigenvector of
/// the compressed `ρ^Γ`, and its Schmidt vectors fix the subspace for the
/// other side. A negative result is only evidence, not a proof.
pub fn one_copy_distillable_search<S: AsRef<str>>(
    rho: &StateMatrix,
    cut: &[S],
    restarts: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Certificate> {
    if restarts == 0 {
        return Err(Error::Parameter("at least one restart is required".into()));
    }
    let side = cut_indices(rho.structure(), cut)?;
    let dims = rho.dims();
    let order = side_first(dims.len(), &side);
    let pt_full = partial_transpose_matrix(&rho.matrix().unscale(rho.trace()), dims, &side);
    let pt = permute_matrix(&pt_full, dims, &order);
    let da: usize = side.iter().map(|&k| dims[k]).product();
    let db = rho.dim() / da;

    let mut best: Option<(f64, CVector)> = None;
    for k in 0..restarts {
        let mut rng = restart_rng(seed, k as u64);
        let start = random_complex_matrix(&mut rng, da, da.min(2));
        let (value, psi) = alternate(&pt, da, db, isometry(&start));
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, psi));
        }
    }
    let (_, psi) = best.expect("restarts >= 1");
    let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    let psi = permute_vector(&psi, &new_dims, &inverse_permutation(&order));
    let value = psi.dotc(&(&pt_full * &psi)).re;
    let verdict = if value < -tol.distill { Verdict::OneCopyDistillable } else { Verdict::NotFoundDistillable };
    let mut cert = Certificate::new(verdict, rho, seed);
    cert.value = value;
    cert.evidence.vector = Some(psi);
    cert.evidence.cuts = Some(vec![cut_labels(rho.structure(), &side)]);
    if verdict == Verdict::NotFoundDistillable {
        cert.note =
            Some(format!("no negative value found in {restarts} restarts; this does not prove undistillability"));
    }
    Ok(cert)
}

fn isometry(m: &CMatrix) -> CMatrix {
    let cols = linalg::orthonormal_columns(m, 1e-12);
    linalg::columns_to_matrix(&cols, m.nrows())
}

/// Returns the final value and the vector (side-first ordering).
fn alternate(pt: &CMatrix, da: usize, db: usize, mut ua: CMatrix) -> (f64, CVector) {
    let mut prev = f64::INFINITY;
    let mut psi = CVector::zeros(da * db);
    let mut value = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        // A-side subspace fixed
        let ea = kron(&ua, &CMatrix::identity(db, db));
        let (lam, phi) = lowest(&(ea.adjoint() * pt * &ea));
        let v1 = &ea * phi;
        let (_, _, v) = linalg::svd(&matricize(&v1, da, db));
        let kb = db.min(2);
        let ub = CMatrix::from_fn(db, kb, |b, j| v[(b, j)].conj());
        // B-side subspace fixed
        let eb = kron(&CMatrix::identity(da, da), &ub);
        let (lam2, chi) = lowest(&(eb.adjoint() * pt * &eb));
        psi = &eb * chi;
        value = lam.min(lam2);
        if lam2 > lam {
            psi = v1;
        }
        if prev - value < CONVERGED {
            break;
        }
        prev = value;
        let (u, _, _) = linalg::svd(&matricize(&psi, da, db));
        ua = u.columns(0, da.min(2)).into_owned();
    }
    let n = psi.norm();
    (value, psi.unscale(n))
}

fn lowest(h: &CMatrix) -> (f64, CVector) {
    let (vals, vecs) = linalg::eigh(h);
    (vals[0], vecs.column(0).into_owned())
}
