use super::{cut_indices, cut_labels, Certificate, Verdict};
use crate::error::Result;
use crate::hilbert::{partial_transpose_matrix, StateMatrix};
use crate::linalg;
use crate::tolerance::Tolerances;

/// `(ρ^Γ ⪰ −τ_psd, λ_min(ρ^Γ))` for the trace-normalised state, with the
/// transpose taken on the listed side of the cut.
pub fn ppt_check<S: AsRef<str>>(rho: &StateMatrix, cut: &[S], tol: &Tolerances) -> Result<(bool, f64)> {
    let side = cut_indices(rho.structure(), cut)?;
    let pt = partial_transpose_matrix(&rho.matrix().unscale(rho.trace()), rho.dims(), &side);
    let min = linalg::min_eigenvalue(&pt);
    Ok((min >= -tol.psd, min))
}

/// PPT test packaged as a certificate. The stored vector is an eigenvector
/// of `ρ^Γ` for its smallest eigenvalue. PPT states on `2 ⊗ 2` and `2 ⊗ 3`
/// cuts are reported as certified separable.
pub fn ppt_certificate<S: AsRef<str>>(rho: &StateMatrix, cut: &[S], tol: &Tolerances) -> Result<Certificate> {
    let side = cut_indices(rho.structure(), cut)?;
    let pt = partial_transpose_matrix(&rho.matrix().unscale(rho.trace()), rho.dims(), &side);
    let (vals, vecs) = linalg::eigh(&pt);
    let v = vecs.column(0).into_owned();
    let min = v.dotc(&(&pt * &v)).re;
    let da: usize = side.iter().map(|&k| rho.dims()[k]).product();
    let db = rho.dim() / da;
    let verdict = if vals[0] < -tol.psd {
        Verdict::Npt
    } else if da.min(db) == 2 && da * db <= 6 {
        Verdict::SeparableCertified
    } else {
        Verdict::Ppt
    };
    let mut cert = Certificate::new(verdict, rho, 0);
    cert.value = min;
    cert.evidence.vector = Some(v);
    cert.evidence.cuts = Some(vec![cut_labels(rho.structure(), &side)]);
    Ok(cert)
}

/// `(‖ρ^Γ‖₁ − 1) / 2` of the trace-normalised state.
pub fn negativity<S: AsRef<str>>(rho: &StateMatrix, cut: &[S]) -> Result<f64> {
    let side = cut_indices(rho.structure(), cut)?;
    let pt = partial_transpose_matrix(&rho.matrix().unscale(rho.trace()), rho.dims(), &side);
    Ok(((linalg::trace_norm_hermitian(&pt) - 1.0) / 2.0).max(0.0))
}
