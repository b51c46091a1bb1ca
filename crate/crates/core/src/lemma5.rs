//! Structural forms of a biseparable decomposition `δ + ε` of
//! `α_{AC_1} ⊗_Kc β_{BC_2}` when `α` has rank two, and the consistency
//! equations tying them to `α` and `β`.
//!
//! All four-party operators here live on the systems `(A, B, C_1, C_2)` with
//! `A` and `C_1` qubits in the normal-form frame of `α`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    numerical_rank, partial_trace_matrix, partial_transpose_matrix, permute_matrix, HilbertStructure, PureVector,
    StateMatrix,
};
use crate::linalg::{self, frobenius, CMatrix, CVector, C64};
use crate::tolerance::Tolerances;

const UNIT_TOL: f64 = 1e-9;
const WEIGHT_TOL: f64 = 1e-12;

/// One term `p |w⟩⟨w| ⊗ (cos ξ |00⟩|x⟩ + sin ξ |11⟩|y⟩)(·)†` of `ε`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsilonTerm {
    pub p: f64,
    pub xi: f64,
    #[serde(with = "crate::io::vector")]
    pub w: CVector,
    #[serde(with = "crate::io::vector")]
    pub x: CVector,
    #[serde(with = "crate::io::vector")]
    pub y: CVector,
}

/// One term `q (cos η |00⟩ + sin η |11⟩)(·)† ⊗ |ψ⟩⟨ψ|` of the separable form of `ε`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PtTerm {
    pub q: f64,
    pub eta: f64,
    #[serde(with = "crate::io::vector")]
    pub psi: CVector,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lemma5Params {
    pub theta: f64,
    pub mu: f64,
    pub f: f64,
    pub nu: f64,
    pub b_dim: usize,
    pub c2_dim: usize,
    #[serde(with = "crate::io::matrix")]
    pub beta0: CMatrix,
    #[serde(with = "crate::io::matrix")]
    pub beta1: CMatrix,
    #[serde(default)]
    pub eps_terms: Vec<EpsilonTerm>,
    #[serde(default)]
    pub pt_terms: Vec<PtTerm>,
}

impl Lemma5Params {
    pub fn validate(&self) -> Result<()> {
        let open = |x: f64| x > 0.0 && x < FRAC_PI_2;
        if !open(self.theta) || !open(self.mu) {
            return Err(Error::Parameter("θ and μ must lie in (0, π/2)".into()));
        }
        if !(self.f > 0.0 && self.f <= 1.0) {
            return Err(Error::Parameter(format!("f = {} outside (0, 1]", self.f)));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.nu) {
            return Err(Error::Parameter(format!("ν = {} outside [0, π/2]", self.nu)));
        }
        if self.b_dim == 0 || self.c2_dim == 0 {
            return Err(Error::Parameter("B and C2 need positive dimension".into()));
        }
        let n = self.bc2_dim();
        for (name, m) in [("beta0", &self.beta0), ("beta1", &self.beta1)] {
            if m.shape() != (n, n) {
                return Err(Error::Shape(format!("{name} is {:?}, expected {n}x{n}", m.shape())));
            }
            StateMatrix::new(self.bc2_structure(), m.clone()).map_err(|e| Error::Parameter(format!("{name}: {e}")))?;
        }
        if !self.eps_terms.is_empty() {
            let total: f64 = self.eps_terms.iter().map(|t| t.p).sum();
            if (total - 1.0).abs() > WEIGHT_TOL {
                return Err(Error::Parameter(format!("ε weights sum to {total}")));
            }
        }
        for (j, t) in self.eps_terms.iter().enumerate() {
            if !(t.p > 0.0) {
                return Err(Error::Parameter(format!("ε term {j}: weight must be positive")));
            }
            if !open(t.xi) {
                return Err(Error::Parameter(format!(
                    "ε term {j}: ξ = {} is an endpoint or out of range; merge it into δ",
                    t.xi
                )));
            }
            check_unit(&t.w, self.b_dim, &format!("ε term {j}: w"))?;
            check_unit(&t.x, self.c2_dim, &format!("ε term {j}: x"))?;
            check_unit(&t.y, self.c2_dim, &format!("ε term {j}: y"))?;
        }
        if !self.pt_terms.is_empty() {
            let total: f64 = self.pt_terms.iter().map(|t| t.q).sum();
            if (total - 1.0).abs() > WEIGHT_TOL {
                return Err(Error::Parameter(format!("separable-form weights sum to {total}")));
            }
        }
        for (k, t) in self.pt_terms.iter().enumerate() {
            if !(t.q > 0.0) {
                return Err(Error::Parameter(format!("separable term {k}: weight must be positive")));
            }
            if !(t.eta.abs() > 0.0 && t.eta.abs() < FRAC_PI_2) {
                return Err(Error::Parameter(format!("separable term {k}: η = {} excluded; merge it into δ", t.eta)));
            }
            check_unit(&t.psi, n, &format!("separable term {k}: ψ"))?;
        }
        Ok(())
    }

    pub fn bc2_dim(&self) -> usize {
        self.b_dim * self.c2_dim
    }

    pub fn bc2_structure(&self) -> HilbertStructure {
        HilbertStructure::new(vec![self.b_dim, self.c2_dim], vec!["B", "C2"]).expect("positive dims")
    }

    /// Structure `(A, B, C1, C2)` shared by `δ` and `ε`.
    pub fn structure(&self) -> HilbertStructure {
        HilbertStructure::new(vec![2, self.b_dim, 2, self.c2_dim], vec!["A", "B", "C1", "C2"]).expect("positive dims")
    }

    /// `α` in the normal form fixed by `θ, μ`, on `(A, C1)`.
    pub fn alpha(&self) -> StateMatrix {
        let s = HilbertStructure::new(vec![2, 2], vec!["A", "C1"]).expect("valid");
        StateMatrix::new(s, crate::eb::normal_form_state(self.theta, self.mu, 2, 2)).expect("PSD by construction")
    }

    /// `β` implied by the parameters: `Tr_{AC1}(δ + ε)`.
    pub fn derived_beta(&self) -> Result<StateMatrix> {
        let delta = build_delta(self)?;
        let mut total = delta.matrix().clone();
        if !self.eps_terms.is_empty() {
            total += build_epsilon(self)?.matrix();
        }
        let m = partial_trace_matrix(&total, &[2, self.b_dim, 2, self.c2_dim], &[1, 3]);
        StateMatrix::new(self.bc2_structure(), m)
    }
}

fn check_unit(v: &CVector, dim: usize, what: &str) -> Result<()> {
    if v.len() != dim {
        return Err(Error::Shape(format!("{what} has length {}, expected {dim}", v.len())));
    }
    if (v.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::Parameter(format!("{what} must be a unit vector (norm {})", v.norm())));
    }
    Ok(())
}

/// `Σ_{ij} |ii⟩⟨jj|_{AC1} ⊗ M_{ij}` on `(A, B, C1, C2)`.
fn embed(blocks: [[Option<&CMatrix>; 2]; 2], b: usize, c2: usize) -> CMatrix {
    let n = b * c2;
    let mut m = CMatrix::zeros(4 * n, 4 * n);
    let idx = [0usize, 3];
    for i in 0..2 {
        for j in 0..2 {
            if let Some(blk) = blocks[i][j] {
                m.view_mut((idx[i] * n, idx[j] * n), (n, n)).copy_from(blk);
            }
        }
    }
    // built on (A, C1, B, C2)
    permute_matrix(&m, &[2, 2, b, c2], &[0, 2, 1, 3])
}

/// `⟨ii|_{AC1} ρ |jj⟩_{AC1}` as an operator on `(B, C2)`.
fn block(rho: &CMatrix, i: usize, j: usize, b: usize, c2: usize) -> CMatrix {
    let m = permute_matrix(rho, &[2, b, 2, c2], &[0, 2, 1, 3]);
    let n = b * c2;
    let idx = [0usize, 3];
    m.view((idx[i] * n, idx[j] * n), (n, n)).into_owned()
}

pub fn build_delta(params: &Lemma5Params) -> Result<StateMatrix> {
    params.validate()?;
    let b0 = params.beta0.scale(params.f * params.nu.cos().powi(2));
    let b1 = params.beta1.scale(params.f * params.nu.sin().powi(2));
    let m = embed([[Some(&b0), None], [None, Some(&b1)]], params.b_dim, params.c2_dim);
    StateMatrix::new(params.structure(), m)
}

pub fn build_epsilon(params: &Lemma5Params) -> Result<StateMatrix> {
    params.validate()?;
    if params.eps_terms.is_empty() {
        return Err(Error::Parameter("ε needs at least one term".into()));
    }
    let (b, c2) = (params.b_dim, params.c2_dim);
    let d = 4 * b * c2;
    let mut m = CMatrix::zeros(d, d);
    for t in &params.eps_terms {
        // vector on (A, C1, B, C2) then reordered
        let bx = linalg::kron_vec(&t.w, &t.x) * C64::from(t.xi.cos());
        let by = linalg::kron_vec(&t.w, &t.y) * C64::from(t.xi.sin());
        let mut v = CVector::zeros(d);
        v.rows_mut(0, b * c2).copy_from(&bx);
        v.rows_mut(3 * b * c2, b * c2).copy_from(&by);
        m += linalg::outer(&v) * C64::from(t.p);
    }
    let m = permute_matrix(&m, &[2, 2, b, c2], &[0, 2, 1, 3]) * C64::from(1.0 - params.f);
    StateMatrix::new(params.structure(), m)
}

/// The separable form `(1-f) Σ q_k (cos η_k|00⟩ + sin η_k|11⟩)(·)† ⊗ |ψ_k⟩⟨ψ_k|`.
pub fn build_pt_form(params: &Lemma5Params) -> Result<StateMatrix> {
    params.validate()?;
    let (b, c2) = (params.b_dim, params.c2_dim);
    let n = b * c2;
    let mut m = CMatrix::zeros(4 * n, 4 * n);
    for t in &params.pt_terms {
        let mut v = CVector::zeros(4 * n);
        v.rows_mut(0, n).copy_from(&(&t.psi * C64::from(t.eta.cos())));
        v.rows_mut(3 * n, n).copy_from(&(&t.psi * C64::from(t.eta.sin())));
        m += linalg::outer(&v) * C64::from(t.q);
    }
    let m = permute_matrix(&m, &[2, 2, b, c2], &[0, 2, 1, 3]) * C64::from(1.0 - params.f);
    StateMatrix::new(params.structure(), m)
}

/// Frobenius residuals of the three block equations and, when applicable,
/// of the separable-branch equations.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Lemma5Report {
    #[serde(rename = "eq9")]
    pub block_00: f64,
    #[serde(rename = "eq10")]
    pub block_11: f64,
    #[serde(rename = "eq11")]
    pub block_01: f64,
    pub pt_symmetric: bool,
    #[serde(rename = "eq13")]
    pub sep_00: Option<f64>,
    #[serde(rename = "eq14")]
    pub sep_11: Option<f64>,
    #[serde(rename = "eq15")]
    pub sep_01: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MarginalResiduals {
    #[serde(rename = "eq9")]
    pub block_00: f64,
    #[serde(rename = "eq10")]
    pub block_11: f64,
    #[serde(rename = "eq11")]
    pub block_01: f64,
}

impl MarginalResiduals {
    pub fn max(&self) -> f64 {
        self.block_00.max(self.block_11).max(self.block_01)
    }
}

/// Compare the `|00⟩⟨00|`, `|11⟩⟨11|` and `|00⟩⟨11|` blocks of `α ⊗ β`
/// against those of `δ + ε`. `α` is trace-normalised first.
pub fn verify_marginal_equations(
    alpha: &StateMatrix,
    beta: &StateMatrix,
    params: &Lemma5Params,
) -> Result<MarginalResiduals> {
    params.validate()?;
    if alpha.dims() != [2, 2] {
        return Err(Error::Shape(format!("α must live on 2 ⊗ 2, got {:?}", alpha.dims())));
    }
    if beta.dims() != [params.b_dim, params.c2_dim] {
        return Err(Error::Shape(format!(
            "β has dims {:?}, parameters expect [{}, {}]",
            beta.dims(),
            params.b_dim,
            params.c2_dim
        )));
    }
    let a = alpha.matrix().unscale(alpha.trace());
    let (a00, a11, a01) = (a[(0, 0)], a[(3, 3)], a[(0, 3)]);
    let beta = beta.matrix();
    let mut r0 = params.beta0.scale(params.f * params.nu.cos().powi(2));
    let mut r1 = params.beta1.scale(params.f * params.nu.sin().powi(2));
    let mut r01 = CMatrix::zeros(params.bc2_dim(), params.bc2_dim());
    let g = 1.0 - params.f;
    for t in &params.eps_terms {
        let wx = linalg::kron_vec(&t.w, &t.x);
        let wy = linalg::kron_vec(&t.w, &t.y);
        let (cs, sn) = (t.xi.cos(), t.xi.sin());
        r0 += linalg::outer(&wx) * C64::from(g * t.p * cs * cs);
        r1 += linalg::outer(&wy) * C64::from(g * t.p * sn * sn);
        r01 += &wx * wy.adjoint() * C64::from(g * t.p * cs * sn);
    }
    Ok(MarginalResiduals {
        block_00: frobenius(&(beta * a00 - r0)),
        block_11: frobenius(&(beta * a11 - r1)),
        block_01: frobenius(&(beta * a01 - r01)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BranchVerdict {
    /// `ε` is invariant under the partial transpose on `A C1` and the
    /// separable form reproduces it.
    SeparableForm,
    /// `ε` is invariant, but the supplied separable terms do not reproduce it.
    SeparableFormMismatch,
    BranchNotApplicable,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PtBranchReport {
    pub verdict: BranchVerdict,
    pub pt_symmetric: bool,
    /// `‖ε^Γ − ε‖_F / ‖ε‖_F`.
    pub asymmetry: f64,
    pub form_residual: Option<f64>,
    #[serde(rename = "eq13")]
    pub sep_00: Option<f64>,
    #[serde(rename = "eq14")]
    pub sep_11: Option<f64>,
    #[serde(rename = "eq15")]
    pub sep_01: Option<f64>,
    /// Number of separable terms `r`.
    pub terms: usize,
    /// Dimension of the range of `β` (or of `ε_{BC2}` when `β` is absent).
    pub range_dim: usize,
    pub rank_bound_holds: bool,
}

pub fn verify_pt_symmetric_branch(
    epsilon: &StateMatrix,
    params: &Lemma5Params,
    beta: Option<&StateMatrix>,
    tol: f64,
) -> Result<PtBranchReport> {
    params.validate()?;
    let (b, c2) = (params.b_dim, params.c2_dim);
    let dims = [2, b, 2, c2];
    if epsilon.dims() != dims {
        return Err(Error::Shape(format!("ε has dims {:?}, expected {dims:?}", epsilon.dims())));
    }
    let e = epsilon.matrix();
    let pt = partial_transpose_matrix(e, &dims, &[0, 2]);
    let norm = frobenius(e).max(f64::MIN_POSITIVE);
    let asymmetry = frobenius(&(&pt - e)) / norm;
    let pt_symmetric = asymmetry <= tol;
    let range_dim = match beta {
        Some(bt) => numerical_rank(bt, Tolerances::default().rank)?,
        None => crate::hilbert::rank_of_matrix(&partial_trace_matrix(e, &dims, &[1, 3]), Tolerances::default().rank),
    };
    let terms = params.pt_terms.len();
    let mut report = PtBranchReport {
        verdict: BranchVerdict::BranchNotApplicable,
        pt_symmetric,
        asymmetry,
        form_residual: None,
        sep_00: None,
        sep_11: None,
        sep_01: None,
        terms,
        range_dim,
        rank_bound_holds: terms >= range_dim,
    };
    if !pt_symmetric || params.pt_terms.is_empty() {
        return Ok(report);
    }
    let form = build_pt_form(params)?;
    let form_residual = frobenius(&(form.matrix() - e));
    let n = params.bc2_dim();
    let (mut s00, mut s11, mut s01) = (CMatrix::zeros(n, n), CMatrix::zeros(n, n), CMatrix::zeros(n, n));
    for t in &params.eps_terms {
        let wx = linalg::kron_vec(&t.w, &t.x);
        let wy = linalg::kron_vec(&t.w, &t.y);
        let (cs, sn) = (t.xi.cos(), t.xi.sin());
        s00 += linalg::outer(&wx) * C64::from(t.p * cs * cs);
        s11 += linalg::outer(&wy) * C64::from(t.p * sn * sn);
        s01 += &wx * wy.adjoint() * C64::from(t.p * cs * sn);
    }
    for t in &params.pt_terms {
        let pp = linalg::outer(&t.psi);
        let (cs, sn) = (t.eta.cos(), t.eta.sin());
        s00 -= &pp * C64::from(t.q * cs * cs);
        s11 -= &pp * C64::from(t.q * sn * sn);
        s01 -= &pp * C64::from(t.q * cs * sn);
    }
    report.form_residual = Some(form_residual);
    report.sep_00 = Some(frobenius(&s00));
    report.sep_11 = Some(frobenius(&s11));
    report.sep_01 = Some(frobenius(&s01));
    report.verdict = if form_residual <= tol * norm.max(1.0) {
        BranchVerdict::SeparableForm
    } else {
        BranchVerdict::SeparableFormMismatch
    };
    Ok(report)
}

/// Full report for a parameter set: block equations against `α` from
/// `θ, μ` and the given (or derived) `β`, plus the separable branch on `ε`.
pub fn analyze(params: &Lemma5Params, beta: Option<&StateMatrix>, tol: f64) -> Result<Lemma5Report> {
    let derived;
    let beta = match beta {
        Some(b) => b,
        None => {
            derived = params.derived_beta()?;
            &derived
        }
    };
    let m = verify_marginal_equations(&params.alpha(), beta, params)?;
    let (pt_symmetric, sep_00, sep_11, sep_01) = if params.eps_terms.is_empty() {
        (false, None, None, None)
    } else {
        let eps = build_epsilon(params)?;
        let r = verify_pt_symmetric_branch(&eps, params, Some(beta), tol)?;
        (r.pt_symmetric, r.sep_00, r.sep_11, r.sep_01)
    };
    Ok(Lemma5Report {
        block_00: m.block_00,
        block_11: m.block_11,
        block_01: m.block_01,
        pt_symmetric,
        sep_00,
        sep_11,
        sep_01,
    })
}

/// `m` with `v = m u` when `‖v − m u‖ < tol ‖v‖`.
pub fn proportional_vector_check(u: &CVector, v: &CVector, tol: f64) -> Option<C64> {
    let un = u.norm_squared();
    if u.len() != v.len() || !(un > 0.0) || !(v.norm() > 0.0) {
        return None;
    }
    let m = u.dotc(v) / C64::from(un);
    ((v - u * m).norm() < tol * v.norm()).then_some(m)
}

/// Outcome of the partial-transpose test that gates replacing `β` by a
/// Werner state in further analysis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WernerReduction {
    pub npt: bool,
    /// Smallest eigenvalue of `β^Γ / Tr β`.
    pub min_pt_eigenvalue: f64,
    /// Local dimension of the Werner family `β` may be replaced by. Set only
    /// for NPT inputs on `d ⊗ d`.
    pub werner_dim: Option<usize>,
    pub justification: Option<String>,
}

pub fn werner_reduction_stub(beta: &StateMatrix, tol: &Tolerances) -> Result<WernerReduction> {
    if beta.dims().len() != 2 {
        return Err(Error::Arity("β must be bipartite".into()));
    }
    let t = beta.trace();
    if !(t > 0.0) {
        return Err(Error::Integrity("β has zero trace".into()));
    }
    let pt = partial_transpose_matrix(beta.matrix(), beta.dims(), &[1]);
    let min = linalg::min_eigenvalue(&pt) / t;
    let npt = min < -tol.psd;
    let square = beta.dims()[0] == beta.dims()[1];
    Ok(WernerReduction {
        npt,
        min_pt_eigenvalue: min,
        werner_dim: (npt && square).then_some(beta.dims()[0]),
        justification: (npt && square).then(|| {
            "NPT states can be converted by LOCC into NPT Werner states, so β may be taken to be a Werner state with \
             parameter just below the PPT boundary"
                .to_string()
        }),
    })
}

/// Move a fully separable part `ζ = |00⟩⟨00| ⊗ ζ0 + |11⟩⟨11| ⊗ ζ1` into `δ`,
/// keeping `f` and `ν`.
pub fn absorb_zeta(params: &Lemma5Params, zeta0: &CMatrix, zeta1: &CMatrix) -> Result<Lemma5Params> {
    params.validate()?;
    let c0 = params.f * params.nu.cos().powi(2);
    let c1 = params.f * params.nu.sin().powi(2);
    if (frobenius(zeta0) > 0.0 && c0 == 0.0) || (frobenius(zeta1) > 0.0 && c1 == 0.0) {
        return Err(Error::Parameter("ν leaves no room for the absorbed block".into()));
    }
    let mut out = params.clone();
    if c0 > 0.0 {
        out.beta0 = &params.beta0 + zeta0.unscale(c0);
    }
    if c1 > 0.0 {
        out.beta1 = &params.beta1 + zeta1.unscale(c1);
    }
    out.validate()?;
    Ok(out)
}

/// `|00⟩⟨00| ⊗ ζ0 + |11⟩⟨11| ⊗ ζ1` on `(A, B, C1, C2)`.
pub fn zeta_state(params: &Lemma5Params, zeta0: &CMatrix, zeta1: &CMatrix) -> Result<StateMatrix> {
    StateMatrix::new(params.structure(), embed([[Some(zeta0), None], [None, Some(zeta1)]], params.b_dim, params.c2_dim))
}

/// The `|ii⟩⟨jj|_{AC1}` block of a four-party operator.
pub fn ac1_block(params: &Lemma5Params, rho: &StateMatrix, i: usize, j: usize) -> CMatrix {
    block(rho.matrix(), i, j, params.b_dim, params.c2_dim)
}

/// Forward construction of a consistent parameter set.
///
/// With `y_j = x_j` the cross equation fixes `β`; the two diagonal
/// equations then fix `β_0, β_1`, which stay PSD when every
/// `tan ξ_j` lies in `[cos²θ cos μ sin μ / (cos²θ cos²μ + sin²θ), tan μ]`.
/// The separable form uses `q = p`, `η = ξ`, `ψ = w ⊗ x`.
pub fn consistent_fixture(
    theta: f64,
    mu: f64,
    f: f64,
    nu: f64,
    terms: &[(f64, f64, CVector, CVector)],
) -> Result<(Lemma5Params, StateMatrix)> {
    let (Some(first), true) = (terms.first(), f < 1.0) else {
        return Err(Error::Parameter("fixture needs ε terms and f < 1".into()));
    };
    let (b, c2) = (first.2.len(), first.3.len());
    let (ct, st) = (theta.cos().powi(2), theta.sin().powi(2));
    let k = ct * mu.cos() * mu.sin();
    let a0 = ct * mu.cos().powi(2) + st;
    let a1 = ct * mu.sin().powi(2);
    let lo = k / a0;
    let hi = mu.tan();
    let n = b * c2;
    let (mut beta, mut s0, mut s1) = (CMatrix::zeros(n, n), CMatrix::zeros(n, n), CMatrix::zeros(n, n));
    let mut eps_terms = Vec::new();
    let mut pt_terms = Vec::new();
    for (p, xi, w, x) in terms {
        let t = xi.tan();
        if t < lo * (1.0 - 1e-12) || t > hi * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!("tan ξ = {t} outside the admissible interval [{lo}, {hi}]")));
        }
        let w = w.unscale(w.norm());
        let x = x.unscale(x.norm());
        let pp = linalg::outer(&linalg::kron_vec(&w, &x));
        beta += &pp * C64::from(p * xi.cos() * xi.sin());
        s0 += &pp * C64::from(p * xi.cos().powi(2));
        s1 += &pp * C64::from(p * xi.sin().powi(2));
        eps_terms.push(EpsilonTerm { p: *p, xi: *xi, w: w.clone(), x: x.clone(), y: x.clone() });
        pt_terms.push(PtTerm { q: *p, eta: *xi, psi: linalg::kron_vec(&w, &x) });
    }
    let g = 1.0 - f;
    beta *= C64::from(g / k);
    let d0 = &beta * C64::from(a0) - &s0 * C64::from(g);
    let d1 = &beta * C64::from(a1) - &s1 * C64::from(g);
    let c0 = f * nu.cos().powi(2);
    let c1 = f * nu.sin().powi(2);
    let fix = |d: CMatrix, c: f64| -> Result<CMatrix> {
        if c > 0.0 {
            Ok(linalg::hermitian_part(&d.unscale(c)))
        } else if frobenius(&d) <= 1e-12 {
            Ok(CMatrix::zeros(n, n))
        } else {
            Err(Error::Parameter("ν at an endpoint cannot absorb the required block".into()))
        }
    };
    let params = Lemma5Params {
        theta,
        mu,
        f,
        nu,
        b_dim: b,
        c2_dim: c2,
        beta0: clip_psd(fix(d0, c0)?),
        beta1: clip_psd(fix(d1, c1)?),
        eps_terms,
        pt_terms,
    };
    params.validate()?;
    let structure = params.bc2_structure();
    Ok((params, StateMatrix::new(structure, beta)?))
}

/// Remove round-off negative eigenvalues from a matrix that is PSD in exact arithmetic.
fn clip_psd(m: CMatrix) -> CMatrix {
    let lmax = linalg::max_eigenvalue(&m).max(0.0);
    if linalg::min_eigenvalue(&m) >= -1e-13 * lmax.max(1.0) {
        let (vals, vecs) = linalg::eigh(&m);
        if vals.iter().all(|&l| l >= 0.0) {
            return m;
        }
        return linalg::spectral_map(&vals, &vecs, |l| l.max(0.0));
    }
    m
}

/// A pure state `|ψ⟩` on `(B, C2)` promoted to a [`PureVector`].
pub fn bc2_vector(params: &Lemma5Params, v: CVector) -> Result<PureVector> {
    PureVector::new(params.bc2_structure(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, c, random_complex_vector, ONE};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn simple_params(nu: f64) -> Lemma5Params {
        let beta0 = CMatrix::identity(4, 4).scale(0.25);
        Lemma5Params {
            theta: 0.5,
            mu: 0.7,
            f: 0.6,
            nu,
            b_dim: 2,
            c2_dim: 2,
            beta0: beta0.clone(),
            beta1: beta0,
            eps_terms: vec![],
            pt_terms: vec![],
        }
    }

    #[test]
    fn delta_endpoint_and_marginal() {
        let p = simple_params(0.0);
        let d = build_delta(&p).unwrap();
        assert!((d.trace() - 0.6).abs() < 1e-14);
        let b11 = ac1_block(&p, &d, 1, 1);
        assert!(frobenius(&b11) < 1e-15);

        let p = simple_params(FRAC_PI_4);
        let d = build_delta(&p).unwrap();
        let ac1 = partial_trace_matrix(d.matrix(), d.dims(), &[0, 2]);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(ac1[(i, j)].norm() < 1e-15);
                }
            }
        }
        let c2 = partial_trace_matrix(d.matrix(), d.dims(), &[3]);
        assert!(frobenius(&(c2.unscale(d.trace()) - CMatrix::identity(2, 2).scale(0.5))) < 1e-14);
    }

    #[test]
    fn epsilon_traces_and_range() {
        let mut p = simple_params(0.3);
        let w = basis_vector(2, 0);
        let x = CVector::from_column_slice(&[c(0.6, 0.0), c(0.0, 0.8)]);
        p.eps_terms = vec![
            EpsilonTerm { p: 0.4, xi: FRAC_PI_4, w: w.clone(), x: x.clone(), y: x.clone() },
            EpsilonTerm { p: 0.6, xi: 0.3, w: basis_vector(2, 1), x: basis_vector(2, 1), y: x },
        ];
        let e = build_epsilon(&p).unwrap();
        assert!((e.trace() - 0.4).abs() < 1e-14);
        let ac1 = partial_trace_matrix(e.matrix(), e.dims(), &[0, 2]);
        for k in [1, 2] {
            assert!(ac1[(k, k)].norm() < 1e-15);
        }
    }

    #[test]
    fn endpoints_rejected() {
        let mut p = simple_params(0.3);
        p.eps_terms =
            vec![EpsilonTerm { p: 1.0, xi: 0.0, w: basis_vector(2, 0), x: basis_vector(2, 0), y: basis_vector(2, 0) }];
        assert!(build_epsilon(&p).is_err());
        p.eps_terms[0].xi = FRAC_PI_2;
        assert!(build_epsilon(&p).is_err());
        p.eps_terms.clear();
        p.pt_terms = vec![PtTerm { q: 1.0, eta: 0.0, psi: basis_vector(4, 0) }];
        assert!(p.validate().is_err());
    }

    fn random_fixture(rng: &mut ChaCha8Rng) -> (Lemma5Params, StateMatrix) {
        let theta: f64 = rng.random_range(0.3..1.2);
        let mu: f64 = rng.random_range(0.3..1.2);
        let f = rng.random_range(0.1..0.5);
        let nu = rng.random_range(0.2..1.3);
        let (ct, st) = (f64::cos(theta).powi(2), f64::sin(theta).powi(2));
        let lo = (ct * mu.cos() * mu.sin() / (ct * mu.cos().powi(2) + st)).atan();
        let d = rng.random_range(1..=3);
        let raw: Vec<f64> = (0..d).map(|_| rng.random_range(1.0..2.0)).collect();
        let total: f64 = raw.iter().sum();
        let terms: Vec<_> = raw
            .iter()
            .map(|r| {
                let xi = lo + (mu - lo) * rng.random_range(0.1..0.9);
                (r / total, xi, random_complex_vector(rng, 2), random_complex_vector(rng, 3))
            })
            .collect();
        consistent_fixture(theta, mu, f, nu, &terms).unwrap()
    }

    #[test]
    fn consistent_fixtures_have_zero_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..20 {
            let (p, beta) = random_fixture(&mut rng);
            let r = verify_marginal_equations(&p.alpha(), &beta, &p).unwrap();
            assert!(r.max() < 1e-12, "{r:?}");
            let eps = build_epsilon(&p).unwrap();
            let b = verify_pt_symmetric_branch(&eps, &p, Some(&beta), 1e-10).unwrap();
            assert_eq!(b.verdict, BranchVerdict::SeparableForm);
            assert!(b.sep_00.unwrap() < 1e-12 && b.sep_11.unwrap() < 1e-12 && b.sep_01.unwrap() < 1e-12);
            assert!(b.rank_bound_holds);
            // δ + ε reproduces α ⊗ β regrouped
            let delta = build_delta(&p).unwrap();
            let sum = delta.matrix() + eps.matrix();
            let full = permute_matrix(&linalg::kron(p.alpha().matrix(), beta.matrix()), &[2, 2, 2, 3], &[0, 2, 1, 3]);
            assert!(frobenius(&(sum - full)) < 1e-12);
            // the sum of the two diagonal equations is consistent
            let derived = p.derived_beta().unwrap();
            assert!(frobenius(&(derived.matrix() - beta.matrix())) < 1e-12);
        }
    }

    #[test]
    fn perturbation_is_visible() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let (mut p, beta) = random_fixture(&mut rng);
        let x = &p.eps_terms[0].x;
        let mut dir = random_complex_vector(&mut rng, 3);
        dir -= x * x.dotc(&dir);
        let nx = x + dir.unscale(dir.norm()) * C64::from(1e-3);
        p.eps_terms[0].x = nx.unscale(nx.norm());
        let r = verify_marginal_equations(&p.alpha(), &beta, &p).unwrap();
        assert!(r.block_01 > 1e-5, "{r:?}");
    }

    #[test]
    fn f_one_leaves_cross_term_unmatched() {
        let mut p = simple_params(0.4);
        p.f = 1.0;
        let beta = StateMatrix::new(p.bc2_structure(), CMatrix::identity(4, 4).scale(0.25)).unwrap();
        let r = verify_marginal_equations(&p.alpha(), &beta, &p).unwrap();
        let expect = p.theta.cos().powi(2) * p.mu.cos() * p.mu.sin() * frobenius(beta.matrix());
        assert!((r.block_01 - expect).abs() < 1e-14);
    }

    #[test]
    fn complex_phase_breaks_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let (mut p, _) = random_fixture(&mut rng);
        p.eps_terms[0].y = &p.eps_terms[0].x * c(0.0, 1.0);
        let eps = build_epsilon(&p).unwrap();
        let r = verify_pt_symmetric_branch(&eps, &p, None, 1e-10).unwrap();
        assert!(!r.pt_symmetric);
        assert_eq!(r.verdict, BranchVerdict::BranchNotApplicable);
    }

    #[test]
    fn equal_weight_branch() {
        let q = 0.5;
        let mut p = simple_params(0.5);
        p.eps_terms = (0..2)
            .map(|k| EpsilonTerm {
                p: q,
                xi: FRAC_PI_4,
                w: basis_vector(2, k),
                x: basis_vector(2, 0),
                y: basis_vector(2, 0),
            })
            .collect();
        p.pt_terms = (0..2).map(|k| PtTerm { q, eta: FRAC_PI_4, psi: basis_vector(4, 2 * k) }).collect();
        let eps = build_epsilon(&p).unwrap();
        let r = verify_pt_symmetric_branch(&eps, &p, None, 1e-10).unwrap();
        assert_eq!(r.verdict, BranchVerdict::SeparableForm);
        assert!(r.sep_00.unwrap() < 1e-15 && r.sep_11.unwrap() < 1e-15 && r.sep_01.unwrap() < 1e-15);
        assert_eq!(r.range_dim, 2);
    }

    #[test]
    fn zeta_absorbs_into_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let (p, beta) = random_fixture(&mut rng);
        let s = 0.3;
        let c0 = p.f * p.nu.cos().powi(2);
        let c1 = p.f * p.nu.sin().powi(2);
        let zeta0 = p.beta0.scale(s * c0);
        let zeta1 = p.beta1.scale(s * c1);
        let mut reduced = p.clone();
        reduced.beta0 = p.beta0.scale(1.0 - s);
        reduced.beta1 = p.beta1.scale(1.0 - s);
        let total = build_delta(&reduced).unwrap().matrix()
            + build_epsilon(&reduced).unwrap().matrix()
            + zeta_state(&reduced, &zeta0, &zeta1).unwrap().matrix();
        let merged = absorb_zeta(&reduced, &zeta0, &zeta1).unwrap();
        let again = build_delta(&merged).unwrap().matrix() + build_epsilon(&merged).unwrap().matrix();
        assert!(frobenius(&(total - again)) < 1e-13);
        assert!(verify_marginal_equations(&merged.alpha(), &beta, &merged).unwrap().max() < 1e-12);
    }

    #[test]
    fn proportional_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let u = random_complex_vector(&mut rng, 4);
        let m = proportional_vector_check(&u, &(&u * c(0.0, 2.0)), 1e-10).unwrap();
        assert!((m - c(0.0, 2.0)).norm() < 1e-14);
        assert!(proportional_vector_check(&basis_vector(2, 0), &basis_vector(2, 1), 1e-10).is_none());
        let noisy = &u + random_complex_vector(&mut rng, 4) * C64::from(1e-12);
        let m = proportional_vector_check(&u, &noisy, 1e-10).unwrap();
        assert!((m - ONE).norm() < 1e-10);
    }

    #[test]
    fn werner_stub() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = CVector::from_column_slice(&[c(h, 0.0), C64::from(0.0), C64::from(0.0), c(h, 0.0)]);
        let s = HilbertStructure::new(vec![2, 2], vec!["B", "C2"]).unwrap();
        let r =
            werner_reduction_stub(&StateMatrix::new(s.clone(), linalg::outer(&bell)).unwrap(), &Tolerances::default())
                .unwrap();
        assert!(r.npt);
        assert!((r.min_pt_eigenvalue + 0.5).abs() < 1e-14);
        assert_eq!(r.werner_dim, Some(2));
        let mixed = StateMatrix::new(s, CMatrix::identity(4, 4).scale(0.25)).unwrap();
        assert!(!werner_reduction_stub(&mixed, &Tolerances::default()).unwrap().npt);
    }

    #[test]
    fn params_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let (p, _) = random_fixture(&mut rng);
        let text = crate::io::to_json_string(&p).unwrap();
        let back: Lemma5Params = serde_json::from_str(&text).unwrap();
        assert_eq!(crate::io::to_json_string(&back).unwrap(), text);
    }
}
