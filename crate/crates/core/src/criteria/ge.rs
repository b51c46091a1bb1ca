use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{all_cuts, cut_labels, distill::schmidt_coefficients, Certificate, Verdict};
use crate::error::{Error, Result};
use crate::hilbert::{partial_transpose_matrix, StateMatrix};
use crate::linalg::{self, frobenius, CMatrix};
use crate::tolerance::Tolerances;

pub const DEFAULT_DIM_CAP: usize = 64;
const STALL_WINDOW: usize = 200;
const STALL_DECREASE: f64 = 1e-12;
const STALL_RELATIVE: f64 = 1e-6;
const CHECK_EVERY: usize = 10;
const WITNESS_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeOptions {
    pub max_iters: usize,
    pub witness_iters: usize,
    pub seed: u64,
    pub dim_cap: usize,
}

impl Default for GeOptions {
    fn default() -> Self {
        Self { max_iters: 20_000, witness_iters: 6_000, seed: 0, dim_cap: DEFAULT_DIM_CAP }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MixtureStatus {
    Feasible,
    Stalled,
    IterationCap,
}

#[derive(Clone, Debug)]
pub struct MixtureSearch {
    pub certificate: Certificate,
    pub status: MixtureStatus,
    /// `ρ − Σ_M X_M` averaged over the last stall window. Absent when feasible.
    pub gap: Option<CMatrix>,
    pub iterations: usize,
}

struct Setup {
    rho: CMatrix,
    dims: Vec<usize>,
    cuts: Vec<Vec<usize>>,
}

fn setup(rho: &StateMatrix, dim_cap: usize) -> Result<Setup> {
    if rho.structure().len() < 2 {
        return Err(Error::Arity("genuine entanglement needs at least two parties".into()));
    }
    if rho.dim() > dim_cap {
        return Err(Error::DimensionCap { dim: rho.dim(), cap: dim_cap });
    }
    let t = rho.trace();
    if !(t > 0.0) {
        return Err(Error::Integrity("state has zero trace".into()));
    }
    Ok(Setup { rho: rho.matrix().unscale(t), dims: rho.dims().to_vec(), cuts: all_cuts(rho.structure().len()) })
}

fn feasible_certificate(
    rho: &StateMatrix,
    seed: u64,
    cuts: &[Vec<usize>],
    parts: Vec<CMatrix>,
    residual: f64,
) -> Certificate {
    let mut cert = Certificate::new(Verdict::PptMixtureFeasible, rho, seed);
    cert.residual = residual;
    cert.evidence.cuts = Some(cuts.iter().map(|c| cut_labels(rho.structure(), c)).collect());
    cert.evidence.parts = Some(parts);
    cert.note = Some("mixture of parts that are PPT across their cuts; this is not a proof of biseparability".into());
    cert
}

/// Douglas-Rachford splitting for `ρ = Σ_M X_M` with `X_M ⪰ 0` and
/// `X_M^{Γ_M} ⪰ 0` over all bipartitions `M`.
///
/// The parts are confined to the range of `ρ`, which every feasible
/// decomposition must respect. A state that is PPT across some single cut
/// is returned at once as a one-part decomposition.
pub fn ppt_mixture_search(
    rho: &StateMatrix,
    max_iters: usize,
    tol: f64,
    seed: u64,
    tolerances: &Tolerances,
) -> Result<MixtureSearch> {
    let s = setup(rho, DEFAULT_DIM_CAP.max(rho.dim()))?;
    let Setup { rho: r, dims, cuts } = &s;
    for cut in cuts {
        let pt = partial_transpose_matrix(r, dims, cut);
        if linalg::min_eigenvalue(&pt) >= -tolerances.psd {
            let cert = feasible_certificate(rho, seed, std::slice::from_ref(cut), vec![r.clone()], 0.0);
            return Ok(MixtureSearch { certificate: cert, status: MixtureStatus::Feasible, gap: None, iterations: 0 });
        }
    }
    let n = r.nrows();
    let m = cuts.len();
    let (vals, vecs) = linalg::eigh(r);
    let lmax = vals.last().copied().unwrap_or(0.0);
    let range = linalg::spectral_map(&vals, &vecs, |l| if l > 1e-12 * lmax { 1.0 } else { 0.0 });
    let full_rank = vals[0] > 1e-12 * lmax;
    let gamma = |x: &CMatrix, k: usize| partial_transpose_matrix(x, dims, &cuts[k]);

    // Douglas-Rachford on pairs (X_M, W_M): the cone set asks X_M, W_M ⪰ 0,
    // the affine set asks W_M = X_M^{Γ_M}, X_M inside range(ρ) and Σ X_M = ρ.
    let mut zx: Vec<CMatrix> = vec![r.unscale(m as f64); m];
    let mut zw: Vec<CMatrix> = (0..m).map(|k| gamma(&zx[k], k)).collect();
    let mut gaps: VecDeque<CMatrix> = VecDeque::new();
    let mut gap_sum = CMatrix::zeros(n, n);
    let mut last_residual = f64::INFINITY;
    for it in 0..max_iters {
        let px: Vec<CMatrix> = zx.iter().map(linalg::project_psd).collect();
        let pw: Vec<CMatrix> = zw.iter().map(linalg::project_psd).collect();
        let reflected: Vec<CMatrix> =
            (0..m).map(|k| (px[k].scale(2.0) - &zx[k] + gamma(&(pw[k].scale(2.0) - &zw[k]), k)).scale(0.5)).collect();
        let ax = affine_step(reflected, r, &range, full_rank);
        let aw: Vec<CMatrix> = (0..m).map(|k| gamma(&ax[k], k)).collect();

        if it % CHECK_EVERY == 0 {
            let floor = ax
                .iter()
                .zip(&aw)
                .fold(f64::INFINITY, |acc, (x, w)| acc.min(linalg::min_eigenvalue(x)).min(linalg::min_eigenvalue(w)));
            if floor >= -tolerances.psd * 0.5 {
                let sum: CMatrix = ax.iter().fold(CMatrix::zeros(n, n), |a, p| a + p);
                let residual = frobenius(&(sum - r));
                if residual <= tol {
                    let cert = feasible_certificate(rho, seed, cuts, ax, residual);
                    return Ok(MixtureSearch {
                        certificate: cert,
                        status: MixtureStatus::Feasible,
                        gap: None,
                        iterations: it,
                    });
                }
            }
        }

        // ρ minus the cone shadow; the direction the sets fail to meet in
        let mut gap = CMatrix::zeros(n, n);
        for k in 0..m {
            let dx = &ax[k] - &px[k];
            let dw = &aw[k] - &pw[k];
            gap += (&dx + gamma(&dw, k)).scale(0.5);
            zx[k] += dx;
            zw[k] += dw;
        }
        let residual = frobenius(&gap);
        last_residual = residual;
        // an infeasible pair of sets leaves a fixed displacement behind
        let drift = if gaps.len() == STALL_WINDOW { frobenius(&(&gap - &gaps[0])) } else { f64::INFINITY };
        gap_sum += &gap;
        gaps.push_back(gap);
        if gaps.len() > STALL_WINDOW {
            gap_sum -= gaps.pop_front().expect("non-empty");
        }
        if drift < STALL_DECREASE.max(STALL_RELATIVE * residual) && residual > tol {
            let gap = gap_sum.unscale(gaps.len() as f64);
            let mut cert = Certificate::inconclusive(rho, seed, "PPT-mixture search stalled");
            cert.residual = residual;
            return Ok(MixtureSearch {
                certificate: cert,
                status: MixtureStatus::Stalled,
                gap: Some(gap),
                iterations: it + 1,
            });
        }
    }
    let mut cert = Certificate::inconclusive(rho, seed, "PPT-mixture search hit the iteration cap");
    cert.residual = if last_residual.is_finite() { last_residual } else { 0.0 };
    let gap = (!gaps.is_empty()).then(|| gap_sum.unscale(gaps.len() as f64));
    Ok(MixtureSearch { certificate: cert, status: MixtureStatus::IterationCap, gap, iterations: max_iters })
}

/// Projection onto `{X_M supported on range(ρ), Σ X_M = ρ}`.
fn affine_step(mut x: Vec<CMatrix>, rho: &CMatrix, range: &CMatrix, full_rank: bool) -> Vec<CMatrix> {
    if !full_rank {
        for p in x.iter_mut() {
            *p = range * &*p * range;
        }
    }
    let n = rho.nrows();
    let sum: CMatrix = x.iter().fold(CMatrix::zeros(n, n), |a, p| a + p);
    let d = (rho - sum).unscale(x.len() as f64);
    for p in x.iter_mut() {
        *p += &d;
        *p = linalg::hermitian_part(p);
    }
    x
}

/// Seeks `W = P_M + Q_M^{Γ_M}` for every bipartition `M` with
/// `0 ⪯ P_M, Q_M ⪯ I` and `Tr(Wρ) < 0`, starting from `w0`.
///
/// The search runs Dykstra's method on the decomposition constraints, the
/// spectral box and the halfspace. Once the decomposition error `E_M` is
/// small enough, `W + λI` with `λ = max_M ‖E_M‖` decomposes exactly, and
/// the certificate stores that shifted witness.
pub fn witness_certify(
    rho: &StateMatrix,
    w0: &CMatrix,
    seed: u64,
    iters: usize,
    tolerances: &Tolerances,
) -> Result<Certificate> {
    let s = setup(rho, DEFAULT_DIM_CAP.max(rho.dim()))?;
    let n = s.rho.nrows();
    if w0.shape() != (n, n) {
        return Err(Error::Shape(format!("witness is {:?}, state has dimension {n}", w0.shape())));
    }
    let norm = frobenius(w0);
    if !(norm > 0.0) {
        return Ok(Certificate::inconclusive(rho, seed, "zero witness seed"));
    }
    let w = linalg::hermitian_part(w0).unscale(norm);
    let start = (&w * &s.rho).trace().re;
    if start >= 0.0 {
        let mut cert = Certificate::inconclusive(rho, seed, "witness seed is not negative on the state");
        cert.value = start;
        return Ok(cert);
    }
    let kappa0 = -start / 2.0;
    let per_round = (iters / 3).max(CHECK_EVERY);
    let mut best_residual = f64::MAX;
    for kappa in [kappa0, kappa0 / 10.0, kappa0 / 100.0] {
        match dykstra_witness(&s, &w, kappa, per_round, tolerances) {
            Ok((witness, parts, value, residual)) => {
                let mut cert = Certificate::new(Verdict::GeCertified, rho, seed);
                cert.value = value;
                cert.residual = residual;
                cert.evidence.witness = Some(witness);
                cert.evidence.parts = Some(parts);
                cert.evidence.cuts = Some(s.cuts.iter().map(|c| cut_labels(rho.structure(), c)).collect());
                return Ok(cert);
            }
            Err(r) => best_residual = best_residual.min(r),
        }
    }
    let mut cert = Certificate::inconclusive(rho, seed, "no fully decomposable witness found");
    cert.value = start;
    cert.residual = best_residual;
    Ok(cert)
}

type Decomposition = (CMatrix, Vec<CMatrix>, f64, f64);

/// On success returns the shifted witness, `[P_1, Q_1, …]`, `Tr(Wρ)` and the
/// reconstruction residual; on failure the smallest shifted value reached.
fn dykstra_witness(
    s: &Setup,
    w0: &CMatrix,
    kappa: f64,
    iters: usize,
    tol: &Tolerances,
) -> std::result::Result<Decomposition, f64> {
    let Setup { rho, dims, cuts } = s;
    let n = rho.nrows();
    let m = cuts.len();
    let mut w = w0.clone();
    let mut p: Vec<CMatrix> = Vec::with_capacity(m);
    let mut q: Vec<CMatrix> = Vec::with_capacity(m);
    for cut in cuts {
        let pm = linalg::project_spectrum(&w, 0.0, 1.0);
        q.push(linalg::project_spectrum(&partial_transpose_matrix(&(&w - &pm), dims, cut), 0.0, 1.0));
        p.push(pm);
    }
    let mut inc_p = vec![CMatrix::zeros(n, n); m];
    let mut inc_q = vec![CMatrix::zeros(n, n); m];
    let mut inc_w = CMatrix::zeros(n, n);
    let rho_sq = frobenius(rho).powi(2);
    let mut best = f64::MAX;
    for it in 0..iters {
        // decomposition constraints: closed-form projection
        let r_sum: Vec<CMatrix> = (0..m).map(|k| &p[k] + partial_transpose_matrix(&q[k], dims, &cuts[k])).collect();
        let total = r_sum.iter().fold(CMatrix::zeros(n, n), |a, x| a + x);
        let shift = (total - w.scale(m as f64)).unscale(2.0 + m as f64);
        for k in 0..m {
            let lam = (&r_sum[k] - &w - &shift).scale(0.5);
            p[k] -= &lam;
            q[k] -= partial_transpose_matrix(&lam, dims, &cuts[k]);
        }
        w += shift;
        // spectral box
        for k in 0..m {
            let y = &p[k] + &inc_p[k];
            p[k] = linalg::project_spectrum(&y, 0.0, 1.0);
            inc_p[k] = y - &p[k];
            let y = &q[k] + &inc_q[k];
            q[k] = linalg::project_spectrum(&y, 0.0, 1.0);
            inc_q[k] = y - &q[k];
        }
        // halfspace Tr(Wρ) ≤ −κ
        let y = &w + &inc_w;
        let t = (&y * rho).trace().re;
        w = if t > -kappa { &y - rho.scale((t + kappa) / rho_sq) } else { y.clone() };
        inc_w = y - &w;

        if it % CHECK_EVERY == CHECK_EVERY - 1 || it + 1 == iters {
            let wh = linalg::hermitian_part(&w);
            let lam = (0..m)
                .map(|k| {
                    let e = &wh - &p[k] - partial_transpose_matrix(&q[k], dims, &cuts[k]);
                    linalg::op_norm_hermitian(&e)
                })
                .fold(0.0_f64, f64::max);
            let value = (&wh * rho).trace().re + lam;
            best = best.min(value);
            if value < -WITNESS_MARGIN {
                let shifted = &wh + CMatrix::identity(n, n).scale(lam);
                let mut parts = Vec::with_capacity(2 * m);
                let mut residual = 0.0_f64;
                let mut ok = true;
                for k in 0..m {
                    let qk = linalg::hermitian_part(&q[k]);
                    let pk = &shifted - partial_transpose_matrix(&qk, dims, &cuts[k]);
                    ok &= linalg::min_eigenvalue(&pk) >= -tol.psd && linalg::min_eigenvalue(&qk) >= -tol.psd;
                    residual =
                        residual.max(frobenius(&(&shifted - &pk - partial_transpose_matrix(&qk, dims, &cuts[k]))));
                    parts.push(pk);
                    parts.push(qk);
                }
                let value = (&shifted * rho).trace().re;
                if ok && value < -WITNESS_MARGIN {
                    return Ok((shifted, parts, value, residual));
                }
            }
        }
    }
    Err(best)
}

/// `c·I − |ψ⟩⟨ψ|` for the dominant eigenvector `ψ` of `ρ`, with `c` the
/// largest squared Schmidt coefficient of `ψ` over all bipartitions.
pub fn projector_witness(rho: &StateMatrix) -> CMatrix {
    let (_, vecs) = linalg::eigh(rho.matrix());
    let n = rho.dim();
    let psi = vecs.column(n - 1).into_owned();
    let c = all_cuts(rho.structure().len())
        .iter()
        .map(|cut| schmidt_coefficients(&psi, rho.dims(), cut)[0].powi(2))
        .fold(0.0_f64, f64::max);
    CMatrix::identity(n, n).scale(c) - linalg::outer(&psi)
}

/// Full pipeline: PPT-mixture search, then witness refinement seeded by the
/// negated mixture gap and, failing that, by the projector witness.
pub fn ge_certify(rho: &StateMatrix, opts: &GeOptions, tolerances: &Tolerances) -> Result<Certificate> {
    if rho.dim() > opts.dim_cap {
        return Err(Error::DimensionCap { dim: rho.dim(), cap: opts.dim_cap });
    }
    let search = ppt_mixture_search(rho, opts.max_iters, tolerances.feasibility, opts.seed, tolerances)?;
    if search.status == MixtureStatus::Feasible {
        return Ok(search.certificate);
    }
    let mut seeds = Vec::new();
    if let Some(gap) = &search.gap {
        seeds.push(-gap);
    }
    seeds.push(projector_witness(rho));
    for w0 in &seeds {
        let cert = witness_certify(rho, w0, opts.seed, opts.witness_iters, tolerances)?;
        if cert.verdict == Verdict::GeCertified {
            return Ok(cert);
        }
    }
    let mut cert = search.certificate;
    cert.note = Some(format!(
        "{}; no fully decomposable witness found",
        cert.note.as_deref().unwrap_or("PPT-mixture search inconclusive")
    ));
    Ok(cert)
}
