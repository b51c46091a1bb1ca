use serde::{Deserialize, Serialize};

use super::{all_cuts, cut_indices};
use crate::hilbert::{partial_transpose_matrix, StateMatrix};
use crate::linalg::{self, frobenius, CMatrix, CVector};
use crate::tolerance::Tolerances;

/// Tolerance for re-deriving a stored scalar from the stored evidence.
pub const VALUE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    SeparableCertified,
    Ppt,
    Npt,
    OneCopyDistillable,
    NotFoundDistillable,
    GeCertified,
    PptMixtureFeasible,
    Inconclusive,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Evidence {
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::io::opt_matrix")]
    pub witness: Option<CMatrix>,
    /// Mixture parts (one per cut) or witness decompositions (`P`, `Q` per cut).
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::io::opt_matrices")]
    pub parts: Option<Vec<CMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::io::opt_vector")]
    pub vector: Option<CVector>,
    /// Each cut as the labels of one side.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cuts: Option<Vec<Vec<String>>>,
}

/// Outcome of a criterion together with everything needed to re-check it.
///
/// Scalars refer to the trace-normalised state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub value: f64,
    pub residual: f64,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub labels: Vec<String>,
    pub evidence: Evidence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Certificate {
    pub(crate) fn new(verdict: Verdict, rho: &StateMatrix, seed: u64) -> Self {
        Self {
            verdict,
            value: 0.0,
            residual: 0.0,
            seed,
            dims: rho.dims().to_vec(),
            labels: rho.labels().to_vec(),
            evidence: Evidence::default(),
            note: None,
        }
    }

    pub fn inconclusive(rho: &StateMatrix, seed: u64, note: impl Into<String>) -> Self {
        let mut c = Self::new(Verdict::Inconclusive, rho, seed);
        c.note = Some(note.into());
        c
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// `value ≤ limit`.
    fn at_most(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.checks.push(CheckResult { name: name.into(), value, limit, passed: value <= limit });
    }

    /// `value ≥ limit`.
    fn at_least(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.checks.push(CheckResult { name: name.into(), value, limit, passed: value >= limit });
    }

    fn require(&mut self, name: impl Into<String>, ok: bool) {
        let v = if ok { 1.0 } else { 0.0 };
        self.checks.push(CheckResult { name: name.into(), value: v, limit: 1.0, passed: ok });
    }
}

/// Re-check a certificate against a state using only the stored evidence.
pub fn verify_certificate(cert: &Certificate, rho: &StateMatrix, tol: &Tolerances) -> VerificationReport {
    let mut r = VerificationReport::default();
    let same = cert.dims == rho.dims() && cert.labels == rho.labels();
    r.require("structure", same);
    let t = rho.trace();
    r.require("state_trace", t > 0.0);
    if !r.passed() {
        return r;
    }
    let m = rho.matrix().unscale(t);
    let dims = rho.dims();
    let n = m.nrows();
    let e = &cert.evidence;
    let cuts: Option<Vec<Vec<usize>>> =
        e.cuts.as_ref().and_then(|cs| cs.iter().map(|c| cut_indices(rho.structure(), c).ok()).collect());
    let needs_cut = matches!(
        cert.verdict,
        Verdict::SeparableCertified
            | Verdict::Ppt
            | Verdict::Npt
            | Verdict::OneCopyDistillable
            | Verdict::NotFoundDistillable
    );
    if needs_cut {
        let (Some(cuts), Some(v)) = (cuts, e.vector.as_ref()) else {
            r.require("evidence_present", false);
            return r;
        };
        r.require("single_cut", cuts.len() == 1);
        r.require("vector_length", v.len() == n);
        if !r.passed() {
            return r;
        }
        let pt = partial_transpose_matrix(&m, dims, &cuts[0]);
        let norm = v.norm();
        r.at_most("vector_norm", (norm - 1.0).abs(), 1e-9);
        let expectation = v.dotc(&(&pt * v)).re;
        r.at_most("pt_expectation", (expectation - cert.value).abs(), VALUE_TOL);
        match cert.verdict {
            Verdict::Npt => r.at_most("pt_negative", expectation, -tol.psd),
            Verdict::Ppt | Verdict::SeparableCertified => {
                r.at_least("pt_min_eigenvalue", linalg::min_eigenvalue(&pt), -tol.psd);
                if cert.verdict == Verdict::SeparableCertified {
                    let da: usize = cuts[0].iter().map(|&k| dims[k]).product();
                    let db = n / da;
                    r.require("ppt_decisive_dimension", da.min(db) == 2 && da * db <= 6);
                }
            }
            Verdict::OneCopyDistillable | Verdict::NotFoundDistillable => {
                let s = super::schmidt_coefficients(v, dims, &cuts[0]);
                r.at_most("schmidt_rank_two", s.get(2).copied().unwrap_or(0.0), 1e-10);
                if cert.verdict == Verdict::OneCopyDistillable {
                    r.at_most("pt_negative", expectation, -tol.distill);
                }
            }
            _ => unreachable!(),
        }
        return r;
    }
    match cert.verdict {
        Verdict::GeCertified => {
            let (Some(w), Some(parts), Some(cuts)) = (e.witness.as_ref(), e.parts.as_ref(), cuts) else {
                r.require("evidence_present", false);
                return r;
            };
            r.require("witness_shape", w.shape() == (n, n) && parts.iter().all(|p| p.shape() == (n, n)));
            let mut expected = all_cuts(dims.len());
            let mut got = cuts.clone();
            expected.sort();
            got.sort();
            r.require("cut_coverage", expected == got && parts.len() == 2 * cuts.len());
            if !r.passed() {
                return r;
            }
            let value = (w * &m).trace().re;
            r.at_most("witness_value", (value - cert.value).abs(), VALUE_TOL);
            r.at_most("witness_negative", value, -1e-9);
            for (k, cut) in cuts.iter().enumerate() {
                let name = cut.iter().map(|&i| rho.labels()[i].as_str()).collect::<Vec<_>>().join("");
                let (p, q) = (&parts[2 * k], &parts[2 * k + 1]);
                let rebuilt = p + partial_transpose_matrix(q, dims, cut);
                r.at_most(format!("decomposability_residual[{name}]"), frobenius(&(w - rebuilt)), tol.decomposition);
                r.at_least(format!("psd_P[{name}]"), psd_floor(p), -tol.psd);
                r.at_least(format!("psd_Q[{name}]"), psd_floor(q), -tol.psd);
            }
        }
        Verdict::PptMixtureFeasible => {
            let (Some(parts), Some(cuts)) = (e.parts.as_ref(), cuts) else {
                r.require("evidence_present", false);
                return r;
            };
            r.require("parts_match_cuts", parts.len() == cuts.len() && !parts.is_empty());
            r.require("part_shape", parts.iter().all(|p| p.shape() == (n, n)));
            if !r.passed() {
                return r;
            }
            let mut sum = CMatrix::zeros(n, n);
            for (k, (p, cut)) in parts.iter().zip(&cuts).enumerate() {
                sum += p;
                r.at_least(format!("part_psd[{k}]"), psd_floor(p), -tol.psd);
                r.at_least(format!("part_pt[{k}]"), psd_floor(&partial_transpose_matrix(p, dims, cut)), -tol.psd);
            }
            r.at_most("sum_residual", frobenius(&(sum - &m)), tol.feasibility);
        }
        Verdict::Inconclusive => {}
        _ => unreachable!(),
    }
    r
}

/// Smallest eigenvalue, or the most negative float for a non-Hermitian matrix.
fn psd_floor(m: &CMatrix) -> f64 {
    if frobenius(&(m - m.adjoint())) > 1e-12 * frobenius(m).max(1.0) {
        return f64::MIN;
    }
    linalg::min_eigenvalue(m)
}
