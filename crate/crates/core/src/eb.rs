//! Entanglement-breaking subspaces `span{|a_i, i⟩}` and the projection
//! cascade that reduces a state supported on one to an entangled state of
//! rank at most two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{apply_local, numerical_rank, range_basis, HilbertStructure, LocalOperator, StateMatrix};
use crate::linalg::{self, basis_vector, CMatrix, CVector, C64, ONE, ZERO};
use crate::tolerance::Tolerances;

/// Relative size below which a coefficient or a transverse component is
/// treated as zero when the cascade chooses its next step.
const DECISION_TOL: f64 = 1e-9;

/// Vectors `|a_0⟩, ..., |a_{n-1}⟩` on `A` paired with the computational basis
/// of the index system `C_1`.
///
/// `index_dim` is the dimension of `C_1`; it must be at least `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EbBasis {
    #[serde(with = "crate::io::vectors")]
    a_vectors: Vec<CVector>,
    index_dim: usize,
}

impl EbBasis {
    pub fn new(a_vectors: Vec<CVector>, index_dim: usize) -> Result<Self> {
        let basis = Self { a_vectors, index_dim };
        basis.validate()?;
        Ok(basis)
    }

    fn validate(&self) -> Result<()> {
        let Some(first) = self.a_vectors.first() else {
            return Err(Error::Parameter("EB basis needs at least one vector".into()));
        };
        let da = first.len();
        if da == 0 {
            return Err(Error::Parameter("A-side vectors must be nonempty".into()));
        }
        for (i, a) in self.a_vectors.iter().enumerate() {
            if a.len() != da {
                return Err(Error::Shape(format!("a_{i} has length {} but a_0 has length {da}", a.len())));
            }
            if !(a.norm() > 0.0) {
                return Err(Error::Parameter(format!("a_{i} is zero")));
            }
        }
        if self.a_vectors.len() > self.index_dim {
            return Err(Error::Parameter(format!(
                "{} vectors need an index system of dimension at least {}, got {}",
                self.a_vectors.len(),
                self.a_vectors.len(),
                self.index_dim
            )));
        }
        Ok(())
    }

    /// The basis `{(|i⟩, i)}` underlying every maximally correlated state.
    pub fn maximally_correlated(n: usize) -> Self {
        Self { a_vectors: (0..n).map(|i| basis_vector(n, i)).collect(), index_dim: n }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: Self = serde_json::from_str(text)?;
        b.validate()?;
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.a_vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_vectors.is_empty()
    }

    pub fn a_vectors(&self) -> &[CVector] {
        &self.a_vectors
    }

    pub fn a_dim(&self) -> usize {
        self.a_vectors[0].len()
    }

    pub fn index_dim(&self) -> usize {
        self.index_dim
    }

    /// `|a_i⟩ ⊗ |i⟩`.
    pub fn span_vector(&self, i: usize) -> CVector {
        linalg::kron_vec(&self.a_vectors[i], &basis_vector(self.index_dim, i))
    }

    pub fn check_against(&self, rho: &StateMatrix) -> Result<()> {
        if rho.dims().len() != 2 {
            return Err(Error::Arity(format!("expected a bipartite state, got {} systems", rho.dims().len())));
        }
        if rho.dims() != [self.a_dim(), self.index_dim] {
            return Err(Error::Shape(format!(
                "state dims {:?} do not match EB basis dims [{}, {}]",
                rho.dims(),
                self.a_dim(),
                self.index_dim
            )));
        }
        Ok(())
    }
}

/// Coefficients `c_ij` with `|ψ_j⟩ = Σ_i c_ij |a_i, i⟩` and `ρ = Σ_j |ψ_j⟩⟨ψ_j|`.
#[derive(Clone, Debug)]
pub struct CoefficientMatrix {
    pub c: CMatrix,
    /// Operator norm of the part of the range outside the span.
    pub residual: f64,
}

impl CoefficientMatrix {
    pub fn decomposition_vectors(&self, basis: &EbBasis) -> Vec<CVector> {
        let spans: Vec<CVector> = (0..basis.len()).map(|i| basis.span_vector(i)).collect();
        (0..self.c.ncols())
            .map(|j| {
                spans.iter().enumerate().fold(CVector::zeros(spans[0].len()), |acc, (i, s)| acc + s * self.c[(i, j)])
            })
            .collect()
    }

    pub fn reconstruct(&self, basis: &EbBasis) -> CMatrix {
        let n = basis.a_dim() * basis.index_dim();
        self.decomposition_vectors(basis).iter().fold(CMatrix::zeros(n, n), |acc, v| acc + linalg::outer(v))
    }
}

/// Express the range of `ρ` in the EB span, failing if it leaves the span.
pub fn verify_eb_membership(rho: &StateMatrix, basis: &EbBasis, tol: &Tolerances) -> Result<CoefficientMatrix> {
    basis.check_against(rho)?;
    let range = range_basis(rho, tol.rank)?;
    let spans: Vec<CVector> = (0..basis.len()).map(|i| basis.span_vector(i)).collect();
    let project = |v: &CVector| -> CVector {
        spans.iter().fold(CVector::zeros(v.len()), |acc, s| {
            let w = s.dotc(v) / C64::from(s.norm_squared());
            acc + s * w
        })
    };
    let residual = if range.is_empty() {
        0.0
    } else {
        let out: Vec<CVector> = range.iter().map(|u| u.vector() - project(u.vector())).collect();
        linalg::singular_values(&linalg::columns_to_matrix(&out, rho.dim()))[0]
    };
    if residual > tol.eb {
        return Err(Error::NotInEbSpan { residual });
    }
    let (vals, vecs) = linalg::eigh(rho.matrix());
    let lmax = vals.last().copied().unwrap_or(0.0);
    let kept: Vec<usize> = (0..vals.len()).rev().filter(|&k| vals[k] > tol.rank * lmax && lmax > 0.0).collect();
    let c = CMatrix::from_fn(basis.len(), kept.len(), |i, j| {
        let m = vecs.column(kept[j]) * C64::from(vals[kept[j]].sqrt());
        spans[i].dotc(&m) / C64::from(spans[i].norm_squared())
    });
    Ok(CoefficientMatrix { c, residual })
}

/// Right-rotate the columns of `c` by a unitary so that `row` becomes
/// `(c, 0, ..., 0)`. Returns the rotated matrix and the unitary.
pub fn wootters_zero_row(c: &CMatrix, row: usize) -> Result<(CMatrix, CMatrix)> {
    if row >= c.nrows() {
        return Err(Error::Parameter(format!("row {row} out of range")));
    }
    let k = c.ncols();
    let x: CVector = c.row(row).adjoint();
    let xn = x.norm();
    if !(xn > 0.0) {
        return Err(Error::DegenerateRow(row));
    }
    let tail = if k > 1 { x.rows(1, k - 1).norm() } else { 0.0 };
    if tail <= 1e-15 * xn {
        return Ok((c.clone(), CMatrix::identity(k, k)));
    }
    let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
    let alpha = -phase * xn;
    let mut v = x.clone();
    v[0] -= alpha;
    let h = CMatrix::identity(k, k) - (&v * v.adjoint()) * C64::from(2.0 / v.norm_squared());
    let mut rotated = c * &h;
    for j in 1..k {
        rotated[(row, j)] = ZERO;
    }
    Ok((rotated, h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    #[serde(rename = "P")]
    P,
    #[serde(rename = "Q")]
    Q,
    #[serde(rename = "R")]
    R,
    #[serde(rename = "P'")]
    PPrime,
    #[serde(rename = "Q'")]
    QPrime,
}

#[derive(Clone, Debug)]
pub struct CascadeStep {
    pub kind: StepKind,
    pub indices: Vec<usize>,
    pub operator: LocalOperator,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepDescriptor {
    pub kind: StepKind,
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ProjectionCascade {
    pub steps: Vec<CascadeStep>,
    pub final_state: StateMatrix,
    pub final_rank: usize,
    /// The two surviving indices `(m_1, m_2)`.
    pub pair: (usize, usize),
    /// Smallest eigenvalue of the partial transpose of the final state,
    /// compressed to its effective two-qubit support and trace-normalised.
    pub min_pt_eigenvalue: f64,
}

impl ProjectionCascade {
    pub fn descriptors(&self) -> Vec<StepDescriptor> {
        self.steps.iter().map(|s| StepDescriptor { kind: s.kind, indices: s.indices.clone() }).collect()
    }

    /// Compose the recorded steps and apply them to `rho`.
    pub fn replay(&self, rho: &StateMatrix) -> Result<StateMatrix> {
        self.steps.iter().try_fold(rho.clone(), |acc, s| apply_local(&acc, &s.operator))
    }
}

/// Reduce `ρ` to an entangled state of rank at most two by local operators
/// acting on the index system.
pub fn projection_cascade(rho: &StateMatrix, basis: &EbBasis, tol: &Tolerances) -> Result<ProjectionCascade> {
    let coeffs = verify_eb_membership(rho, basis, tol)?;
    let structure = rho.structure().clone();
    let n = basis.len();
    let dc = basis.index_dim();
    let a = basis.a_vectors();

    let mut c = coeffs.c.clone();
    let mut active: Vec<usize> = (0..c.ncols()).collect();
    let mut used_rows = vec![false; n];
    let mut steps = Vec::new();
    let mut peels = 0usize;

    loop {
        if active.is_empty() {
            return Err(Error::CascadeFailure(
                "every decomposition vector peeled to a product; the state is separable".into(),
            ));
        }
        let scale = active.iter().map(|&j| c.column(j).norm()).fold(0.0, f64::max);
        let Some(t) =
            (0..n).find(|&i| !used_rows[i] && active.iter().any(|&j| c[(i, j)].norm() > DECISION_TOL * scale))
        else {
            return Err(Error::CascadeFailure("no active index carries weight".into()));
        };

        let sub = CMatrix::from_fn(n, active.len(), |i, j| c[(i, active[j])]);
        let (rotated, _) = wootters_zero_row(&sub, t)?;
        for (jj, &j) in active.iter().enumerate() {
            c.set_column(j, &rotated.column(jj));
        }
        let pivot = active[0];
        let ct = c[(t, pivot)];
        let col_norm = c.column(pivot).norm();

        let mut best: Option<(usize, f64)> = None;
        for k in (0..n).filter(|&k| k != t) {
            let ck = c[(k, pivot)];
            if ck.norm() <= DECISION_TOL * col_norm {
                continue;
            }
            let transverse = transverse_norm(&a[t], &a[k]);
            if transverse > DECISION_TOL {
                let score = ck.norm() * a[k].norm() * transverse;
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((k, score));
                }
            }
        }

        if let Some((k, _)) = best {
            let (m1, m2) = (t.min(k), t.max(k));
            let mut pi = CMatrix::zeros(dc, dc);
            pi[(m1, m1)] = ONE;
            pi[(m2, m2)] = ONE;
            let op = LocalOperator::single(&structure, 1, pi)?;
            let current = replay_ops(rho, &steps)?;
            let trivial = dc == 2;
            let projected = if trivial { current.clone() } else { apply_local(&current, &op)? };
            if !trivial {
                let kind = if peels == 0 { StepKind::P } else { StepKind::PPrime };
                steps.push(CascadeStep { kind, indices: vec![m1, m2], operator: op });
            }
            let final_state = projected;
            let final_rank = numerical_rank(&final_state, tol.rank)?;
            let min_pt = compressed_min_pt(&final_state, &a[m1], &a[m2], m1, m2)?;
            if final_rank > 2 {
                return Err(Error::CascadeFailure(format!("final rank {final_rank} exceeds two")));
            }
            if min_pt >= -tol.psd {
                return Err(Error::CascadeFailure(format!(
                    "projected state on indices ({m1}, {m2}) is PPT (min eigenvalue {min_pt:.3e})"
                )));
            }
            return Ok(ProjectionCascade { steps, final_state, final_rank, pair: (m1, m2), min_pt_eigenvalue: min_pt });
        }

        // every weighted a_k is parallel to a_t: the pivot vector is a_t ⊗ u
        if active.len() == 1 {
            return Err(Error::CascadeFailure(
                "the last decomposition vector is a product; the state is separable".into(),
            ));
        }
        let mut w = CVector::zeros(dc);
        let at2 = a[t].norm_squared();
        for k in (0..n).filter(|&k| k != t) {
            let ck = c[(k, pivot)];
            if ck.norm() > DECISION_TOL * col_norm {
                let lambda = a[t].dotc(&a[k]) / C64::from(at2);
                w[k] = ck * lambda / ct;
            }
            c[(k, pivot)] = ZERO;
        }
        let q1 = CMatrix::identity(dc, dc) - &w * basis_vector(dc, t).adjoint();
        let kind = if peels == 0 { StepKind::Q } else { StepKind::R };
        steps.push(CascadeStep { kind, indices: vec![t], operator: LocalOperator::single(&structure, 1, q1)? });
        peels += 1;
        used_rows[t] = true;
        active.remove(0);
    }
}

fn replay_ops(rho: &StateMatrix, steps: &[CascadeStep]) -> Result<StateMatrix> {
    steps.iter().try_fold(rho.clone(), |acc, s| apply_local(&acc, &s.operator))
}

/// Norm of the component of `v` orthogonal to `u`, relative to `‖v‖`.
fn transverse_norm(u: &CVector, v: &CVector) -> f64 {
    let proj = u * (u.dotc(v) / C64::from(u.norm_squared()));
    (v - proj).norm() / v.norm()
}

/// Orthonormal basis of `span{a1, a2}` as columns.
fn pair_isometry(a1: &CVector, a2: &CVector) -> Result<CMatrix> {
    let cols = linalg::orthonormal_columns(&linalg::columns_to_matrix(&[a1.clone(), a2.clone()], a1.len()), 1e-12);
    if cols.len() != 2 {
        return Err(Error::CascadeFailure("surviving A-side vectors are parallel".into()));
    }
    Ok(linalg::columns_to_matrix(&cols, a1.len()))
}

fn compress_pair(rho: &StateMatrix, a1: &CVector, a2: &CVector, m1: usize, m2: usize) -> Result<CMatrix> {
    let v = pair_isometry(a1, a2)?;
    let dc = rho.dims()[1];
    let mut e = CMatrix::zeros(dc, 2);
    e[(m1, 0)] = ONE;
    e[(m2, 1)] = ONE;
    let iso = linalg::kron(&v, &e);
    Ok(iso.adjoint() * rho.matrix() * iso)
}

fn compressed_min_pt(rho: &StateMatrix, a1: &CVector, a2: &CVector, m1: usize, m2: usize) -> Result<f64> {
    let m = compress_pair(rho, a1, a2, m1, m2)?;
    let t = m.trace().re;
    if t <= 0.0 {
        return Err(Error::CascadeFailure("projected state vanishes".into()));
    }
    let pt = crate::hilbert::partial_transpose_matrix(&m, &[2, 2], &[1]);
    Ok(linalg::min_eigenvalue(&pt) / t)
}

/// Cascade followed by the relabelling `Q'` that moves the surviving indices
/// `(m_1, m_2)` to `(0, 1)` and an isometric compression of `A` onto
/// `span{a_{m1}, a_{m2}}`, giving a state on `2 ⊗ 2`.
pub fn reduce_to_canonical_pair(
    rho: &StateMatrix,
    basis: &EbBasis,
    tol: &Tolerances,
) -> Result<(ProjectionCascade, StateMatrix)> {
    let mut cascade = projection_cascade(rho, basis, tol)?;
    let (m1, m2) = cascade.pair;
    let a = basis.a_vectors();
    let dc = basis.index_dim();
    let da = basis.a_dim();
    let mut q2 = CMatrix::zeros(2, dc);
    q2[(0, m1)] = ONE;
    q2[(1, m2)] = ONE;
    let a_side = if da == 2 { CMatrix::identity(2, 2) } else { pair_isometry(&a[m1], &a[m2])?.adjoint() };
    let op = LocalOperator::new(cascade.final_state.structure().clone(), vec![a_side, q2])?;
    let reduced = apply_local(&cascade.final_state, &op)?;
    if (m1, m2) != (0, 1) || dc != 2 || da != 2 {
        cascade.steps.push(CascadeStep { kind: StepKind::QPrime, indices: vec![m1, m2], operator: op });
    }
    Ok((cascade, reduced))
}

/// Solutions `(a:b)` of the pencil `a|v⟩ + b|w⟩` that are product vectors.
#[derive(Clone, Debug, PartialEq)]
pub enum PencilSolutions {
    /// Ratios normalised to `|a|² + |b|² = 1` with the first nonzero
    /// component real and positive.
    Finite(Vec<(C64, C64)>),
    /// Every member of a continuum is a product vector.
    InfiniteFamily,
}

impl PencilSolutions {
    pub fn ratios(&self) -> Option<&[(C64, C64)]> {
        match self {
            Self::Finite(r) => Some(r),
            Self::InfiniteFamily => None,
        }
    }
}

/// Find the product vectors in a two-dimensional pencil on `d_A ⊗ d_B`.
///
/// Every 2×2 minor of the matricisation of `a V + b W` is a homogeneous
/// quadratic in `(a, b)`. The roots of the dominant minor are the only
/// candidates; each is accepted when `σ_2 < 1e-8 σ_1`.
pub fn product_vectors_in_pencil(v: &CVector, w: &CVector, da: usize, db: usize) -> Result<PencilSolutions> {
    if v.len() != da * db || w.len() != da * db {
        return Err(Error::Shape("pencil vectors do not match the bipartite dimensions".into()));
    }
    let vm = linalg::matricize(v, da, db);
    let wm = linalg::matricize(w, da, db);
    let mut dominant = [ZERO; 3];
    let mut dominant_size = 0.0;
    for i1 in 0..da {
        for i2 in i1 + 1..da {
            for j1 in 0..db {
                for j2 in j1 + 1..db {
                    let (v11, v12, v21, v22) = (vm[(i1, j1)], vm[(i1, j2)], vm[(i2, j1)], vm[(i2, j2)]);
                    let (w11, w12, w21, w22) = (wm[(i1, j1)], wm[(i1, j2)], wm[(i2, j1)], wm[(i2, j2)]);
                    let q =
                        [v11 * v22 - v12 * v21, v11 * w22 + w11 * v22 - v12 * w21 - w12 * v21, w11 * w22 - w12 * w21];
                    let size = q.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    if size > dominant_size {
                        dominant_size = size;
                        dominant = q;
                    }
                }
            }
        }
    }
    let scale = (vm.norm() + wm.norm()).powi(2);
    if dominant_size <= 1e-12 * scale {
        return Ok(PencilSolutions::InfiniteFamily);
    }
    let mut out: Vec<(C64, C64)> = Vec::new();
    for (a, b) in binary_quadratic_roots(dominant) {
        let (a, b) = normalize_ratio(a, b);
        let m = &vm * a + &wm * b;
        let s = linalg::singular_values(&m);
        let accepted = s.len() < 2 || s[1] < 1e-8 * s[0];
        let duplicate = out.iter().any(|&(x, y)| (x.conj() * a + y.conj() * b).norm() > 1.0 - 1e-9);
        if accepted && !duplicate {
            out.push((a, b));
        }
    }
    Ok(PencilSolutions::Finite(out))
}

/// Projective roots of `A a² + B ab + C b²`.
fn binary_quadratic_roots([qa, qb, qc]: [C64; 3]) -> Vec<(C64, C64)> {
    let big = qa.norm().max(qb.norm()).max(qc.norm());
    if qa.norm().max(qc.norm()) <= 1e-14 * big {
        return vec![(ONE, ZERO), (ZERO, ONE)];
    }
    if qa.norm() >= qc.norm() {
        quadratic_roots(qa, qb, qc).into_iter().map(|t| (t, ONE)).collect()
    } else {
        quadratic_roots(qc, qb, qa).into_iter().map(|s| (ONE, s)).collect()
    }
}

/// Roots of `a x² + b x + c` with `a ≠ 0`, avoiding cancellation.
fn quadratic_roots(a: C64, b: C64, c: C64) -> Vec<C64> {
    let sq = (b * b - a * c * 4.0).sqrt();
    let plus = b + sq;
    let minus = b - sq;
    let q = if plus.norm() >= minus.norm() { plus * -0.5 } else { minus * -0.5 };
    if q.norm() == 0.0 {
        return vec![ZERO, ZERO];
    }
    vec![q / a, c / q]
}

fn normalize_ratio(a: C64, b: C64) -> (C64, C64) {
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / n, b / n);
    let lead = if a.norm() > 1e-14 { a } else { b };
    let phase = lead.conj() / lead.norm();
    (a * phase, b * phase)
}

/// Local frame bringing a rank-two state to the two-parameter normal form
/// `cos²θ (cos μ|00⟩ + sin μ|11⟩)(·)† + sin²θ |00⟩⟨00|`.
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub x: CMatrix,
    pub y: CMatrix,
    pub theta: f64,
    pub mu: f64,
    /// Parameters obtained with the roles of the two product vectors swapped.
    pub twin: (f64, f64),
    /// Rank-one input: `θ = 0` and `μ` is the Schmidt angle.
    pub pure_limit: bool,
    /// Trace of `(X⊗Y) α (X⊗Y)†` before normalisation.
    pub scale: f64,
}

impl NormalForm {
    pub fn local_operator(&self, structure: &HilbertStructure) -> Result<LocalOperator> {
        LocalOperator::new(structure.clone(), vec![self.x.clone(), self.y.clone()])
    }
}

/// The normal-form state on `d_A ⊗ d_B`, embedded in the first two levels.
pub fn normal_form_state(theta: f64, mu: f64, da: usize, db: usize) -> CMatrix {
    let mut v = CVector::zeros(da * db);
    v[0] = C64::from(mu.cos());
    v[db + 1] = C64::from(mu.sin());
    let mut m = linalg::outer(&v) * C64::from(theta.cos().powi(2));
    m[(0, 0)] += C64::from(theta.sin().powi(2));
    m
}

pub fn normal_form_rank2(alpha: &StateMatrix, tol: &Tolerances) -> Result<NormalForm> {
    if alpha.dims().len() != 2 {
        return Err(Error::Arity("normal form needs a bipartite state".into()));
    }
    let (da, db) = (alpha.dims()[0], alpha.dims()[1]);
    if da < 2 || db < 2 {
        return Err(Error::NormalForm("both local dimensions must be at least two".into()));
    }
    let range = range_basis(alpha, tol.rank)?;
    match range.len() {
        1 => return pure_normal_form(range[0].vector(), da, db, alpha.trace()),
        2 => {}
        r => return Err(Error::NormalForm(format!("rank {r}, expected 2"))),
    }
    let (v, w) = (range[0].vector(), range[1].vector());
    let ratios = match product_vectors_in_pencil(v, w, da, db)? {
        PencilSolutions::Finite(r) if r.len() == 2 => r,
        PencilSolutions::Finite(r) => {
            return Err(Error::NormalForm(format!("range contains {} product vectors, expected 2", r.len())))
        }
        PencilSolutions::InfiniteFamily => {
            return Err(Error::NormalForm("range is a product with a common local factor".into()))
        }
    };
    let factors: Vec<(CVector, CVector)> =
        ratios.iter().map(|&(a, b)| split_product(&(v * a + w * b), da, db)).collect();
    let xinv = completed_basis(&factors[0].0, &factors[1].0)?;
    let yinv = completed_basis(&factors[0].1, &factors[1].1)?;
    let x0 = invert(&xinv)?;
    let y = invert(&yinv)?;

    let block = |x: &CMatrix| -> CMatrix {
        let k = linalg::kron(x, &y);
        let full = &k * alpha.matrix() * k.adjoint();
        let idx = [0, db + 1];
        CMatrix::from_fn(2, 2, |i, j| full[(idx[i], idx[j])])
    };
    let m = block(&x0);
    let scale = m.trace().re;
    let m01 = m[(0, 1)];
    if m01.norm() <= 1e-9 * scale {
        return Err(Error::Degenerate("no coherence between the two product vectors; the state is separable".into()));
    }
    let mut z = CMatrix::identity(da, da);
    z[(1, 1)] = m01 / m01.norm();
    let mut x = &z * &x0;

    let mut m = block(&x).unscale(scale);
    let swapped = m[(1, 1)].re > m[(0, 0)].re;
    if swapped {
        x.swap_rows(0, 1);
        let mut yy = y.clone();
        yy.swap_rows(0, 1);
        let k = linalg::kron(&x, &yy);
        let full = &k * alpha.matrix() * k.adjoint();
        let idx = [0, db + 1];
        m = CMatrix::from_fn(2, 2, |i, j| full[(idx[i], idx[j])]).unscale(scale);
        let (theta, mu) = block_parameters(&m)?;
        let twin = block_parameters(&swap2(&m))?;
        return Ok(NormalForm { x, y: yy, theta, mu, twin, pure_limit: false, scale });
    }
    let (theta, mu) = block_parameters(&m)?;
    let twin = block_parameters(&swap2(&m))?;
    Ok(NormalForm { x, y, theta, mu, twin, pure_limit: false, scale })
}

fn swap2(m: &CMatrix) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| m[(1 - i, 1 - j)])
}

/// `(θ, μ)` of a unit-trace 2×2 block with real positive off-diagonal.
fn block_parameters(m: &CMatrix) -> Result<(f64, f64)> {
    let (m00, m11, m01) = (m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)].norm());
    let det = m00 * m11 - m01 * m01;
    if m11 <= 0.0 {
        return Err(Error::Degenerate("second product vector carries no weight".into()));
    }
    let lambda = (det / m11).max(0.0);
    let r00 = m00 - lambda;
    let theta = lambda.min(1.0).sqrt().asin();
    let mu = m11.sqrt().atan2(r00.max(0.0).sqrt());
    Ok((theta, mu))
}

fn pure_normal_form(v: &CVector, da: usize, db: usize, trace: f64) -> Result<NormalForm> {
    let mat = linalg::matricize(v, da, db);
    let (u, s, v) = linalg::svd(&mat);
    if s.len() < 2 || s[1] <= 1e-9 * s[0] {
        return Err(Error::Degenerate("pure product state".into()));
    }
    let mut ucols: Vec<CVector> = (0..s.len()).map(|k| u.column(k).into_owned()).collect();
    let mut vcols: Vec<CVector> = (0..s.len()).map(|k| v.column(k).map(|z| z.conj())).collect();
    ucols.truncate(2);
    vcols.truncate(2);
    let x = invert(&completed_basis(&ucols[0], &ucols[1])?)?;
    let y = invert(&completed_basis(&vcols[0], &vcols[1])?)?;
    let mu = s[1].atan2(s[0]);
    Ok(NormalForm {
        x,
        y,
        theta: 0.0,
        mu,
        twin: (0.0, std::f64::consts::FRAC_PI_2 - mu),
        pure_limit: true,
        scale: trace,
    })
}

/// Unit-norm local factors of a product vector.
fn split_product(p: &CVector, da: usize, db: usize) -> (CVector, CVector) {
    let m = linalg::matricize(p, da, db);
    let col = (0..db).max_by(|&i, &j| m.column(i).norm().total_cmp(&m.column(j).norm())).unwrap_or(0);
    let x: CVector = m.column(col).into_owned();
    let row = (0..da).max_by(|&i, &j| x[i].norm().total_cmp(&x[j].norm())).unwrap_or(0);
    let y: CVector = m.row(row).transpose() / x[row];
    (x.unscale(x.norm()), y.unscale(y.norm()))
}

/// Matrix with columns `u1, u2` followed by an orthonormal completion.
fn completed_basis(u1: &CVector, u2: &CVector) -> Result<CMatrix> {
    let d = u1.len();
    let mut cols = vec![u1.clone(), u2.clone()];
    let mut spanning = linalg::columns_to_matrix(&cols, d);
    spanning = spanning.resize_horizontally(2 + d, ZERO);
    for k in 0..d {
        spanning[(k, 2 + k)] = ONE;
    }
    let ortho = linalg::orthonormal_columns(&spanning, 1e-10);
    if ortho.len() != d {
        return Err(Error::NormalForm("local factors of the product vectors are parallel".into()));
    }
    cols.extend(ortho.into_iter().skip(2));
    Ok(linalg::columns_to_matrix(&cols, d))
}

fn invert(m: &CMatrix) -> Result<CMatrix> {
    m.clone().try_inverse().ok_or_else(|| Error::NormalForm("local frame is singular".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, frobenius, random_complex_matrix, random_complex_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn st(da: usize, dc: usize) -> HilbertStructure {
        HilbertStructure::new(vec![da, dc], vec!["A", "C1"]).unwrap()
    }

    fn ket(d: usize, entries: &[(usize, C64)]) -> CVector {
        let mut v = CVector::zeros(d);
        for &(i, z) in entries {
            v[i] += z;
        }
        v
    }

    #[test]
    fn membership_of_span() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(0.6, 0.0);
        m[(3, 3)] = c(0.4, 0.0);
        m[(0, 3)] = c(0.2, 0.0);
        m[(3, 0)] = c(0.2, 0.0);
        let rho = StateMatrix::new(st(2, 2), m).unwrap();
        let basis = EbBasis::maximally_correlated(2);
        let co = verify_eb_membership(&rho, &basis, &Tolerances::default()).unwrap();
        assert_eq!(co.c.nrows(), 2);
        assert!(co.residual < 1e-14);
        assert!(frobenius(&(co.reconstruct(&basis) - rho.matrix())) < 1e-14);
    }

    #[test]
    fn membership_rejects_outside_component() {
        let eps = 1e-3;
        let v = ket(4, &[(0, ONE), (3, ONE), (1, c(eps, 0.0))]);
        let rho = StateMatrix::new(st(2, 2), linalg::outer(&v)).unwrap();
        match verify_eb_membership(&rho, &EbBasis::maximally_correlated(2), &Tolerances::default()) {
            Err(Error::NotInEbSpan { residual }) => assert!((residual - eps / v.norm()).abs() < 1e-14),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn householder_rotation() {
        let c0 = CMatrix::from_row_slice(1, 3, &[ONE, ZERO, ZERO]);
        let (r, u) = wootters_zero_row(&c0, 0).unwrap();
        assert_eq!(r, c0);
        assert_eq!(u, CMatrix::identity(3, 3));

        let h = C64::from(FRAC_1_SQRT_2);
        let c1 = CMatrix::from_row_slice(2, 2, &[h, h, c(0.3, 0.1), c(-0.2, 0.5)]);
        let (r, u) = wootters_zero_row(&c1, 0).unwrap();
        assert!(r[(0, 1)].norm() < 1e-15);
        assert!((r[(0, 0)].norm() - 1.0).abs() < 1e-15);
        assert!(frobenius(&(&u * u.adjoint() - CMatrix::identity(2, 2))) < 1e-14);
        assert!(frobenius(&(&r * r.adjoint() - &c1 * c1.adjoint())) < 1e-14);

        let z = CMatrix::zeros(2, 2);
        assert!(matches!(wootters_zero_row(&z, 1), Err(Error::DegenerateRow(1))));
    }

    #[test]
    fn pencil_examples() {
        let e00 = ket(4, &[(0, ONE)]);
        let e11 = ket(4, &[(3, ONE)]);
        let e01 = ket(4, &[(1, ONE)]);
        let sols = product_vectors_in_pencil(&e00, &e11, 2, 2).unwrap();
        let r = sols.ratios().unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().any(|&(a, b)| (a - ONE).norm() < 1e-14 && b.norm() < 1e-14));
        assert!(r.iter().any(|&(a, b)| a.norm() < 1e-14 && (b - ONE).norm() < 1e-14));

        assert_eq!(product_vectors_in_pencil(&e00, &e01, 2, 2).unwrap(), PencilSolutions::InfiniteFamily);

        let plus = &e00 + &e11;
        let minus = &e00 - &e11;
        let r = product_vectors_in_pencil(&plus, &minus, 2, 2).unwrap();
        let r = r.ratios().unwrap().to_vec();
        let h = FRAC_1_SQRT_2;
        assert_eq!(r.len(), 2);
        assert!(r.iter().any(|&(a, b)| (a - c(h, 0.0)).norm() < 1e-12 && (b - c(h, 0.0)).norm() < 1e-12));
        assert!(r.iter().any(|&(a, b)| (a - c(h, 0.0)).norm() < 1e-12 && (b + c(h, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn pencil_complex_ratios_in_higher_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..20 {
            let x1 = random_complex_vector(&mut rng, 3);
            let x2 = random_complex_vector(&mut rng, 3);
            let y1 = random_complex_vector(&mut rng, 4);
            let y2 = random_complex_vector(&mut rng, 4);
            let p1 = linalg::kron_vec(&x1, &y1);
            let p2 = linalg::kron_vec(&x2, &y2);
            let g = random_complex_matrix(&mut rng, 2, 2);
            let v = &p1 * g[(0, 0)] + &p2 * g[(0, 1)];
            let w = &p1 * g[(1, 0)] + &p2 * g[(1, 1)];
            let r = product_vectors_in_pencil(&v, &w, 3, 4).unwrap();
            assert_eq!(r.ratios().unwrap().len(), 2);
        }
    }

    #[test]
    fn normal_form_examples() {
        let h = FRAC_1_SQRT_2;
        let bell = ket(4, &[(0, c(h, 0.0)), (3, c(h, 0.0))]);
        let mut m = linalg::outer(&bell);
        m[(0, 0)] += c(0.25, 0.0);
        let alpha = StateMatrix::new(st(2, 2), m).unwrap();
        let nf = normal_form_rank2(&alpha, &Tolerances::default()).unwrap();
        let out = apply_local(&alpha, &nf.local_operator(alpha.structure()).unwrap()).unwrap();
        let expect = normal_form_state(nf.theta, nf.mu, 2, 2);
        assert!(frobenius(&(out.matrix().unscale(nf.scale) - expect)) < 1e-12);
        // m = [[3/4,1/2],[1/2,1/2]]/(5/4): sin²θ = det/m11
        let sin2 = (0.6 * 0.4 - 0.16) / 0.4;
        assert!((nf.theta.sin().powi(2) - sin2).abs() < 1e-12);

        let diag =
            StateMatrix::new(st(2, 2), linalg::outer(&ket(4, &[(0, ONE)])) + linalg::outer(&ket(4, &[(3, ONE)])))
                .unwrap();
        assert!(matches!(normal_form_rank2(&diag, &Tolerances::default()), Err(Error::Degenerate(_))));

        let mu = 0.4_f64;
        let pure = ket(4, &[(0, c(mu.cos(), 0.0)), (3, c(mu.sin(), 0.0))]);
        let nf = normal_form_rank2(&StateMatrix::new(st(2, 2), linalg::outer(&pure)).unwrap(), &Tolerances::default())
            .unwrap();
        assert!(nf.pure_limit);
        assert_eq!(nf.theta, 0.0);
        assert!((nf.mu - mu).abs() < 1e-12);
    }

    #[test]
    fn normal_form_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..30 {
            let theta = 0.1 + (std::f64::consts::FRAC_PI_2 - 0.2) * ((trial * 7 % 30) as f64 / 29.0);
            let mu = 0.1 + (std::f64::consts::FRAC_PI_2 - 0.2) * ((trial * 11 % 30) as f64 / 29.0);
            let (da, db) = (2 + trial % 2, 2 + (trial / 2) % 2);
            let xi = unit_column_frame(&mut rng, da);
            let yi = unit_column_frame(&mut rng, db);
            let n = normal_form_state(theta, mu, da, db);
            let k = linalg::kron(&xi, &yi);
            let alpha = StateMatrix::new(st(da, db), &k * n * k.adjoint() * C64::from(1.7)).unwrap();
            let nf = normal_form_rank2(&alpha, &Tolerances::default()).unwrap();
            let hit = |(t, m): (f64, f64)| (t - theta).abs() < 1e-8 && (m - mu).abs() < 1e-8;
            assert!(
                hit((nf.theta, nf.mu)) || hit(nf.twin),
                "trial {trial}: {theta} {mu} vs {:?} {:?}",
                (nf.theta, nf.mu),
                nf.twin
            );
            let out = apply_local(&alpha, &nf.local_operator(alpha.structure()).unwrap()).unwrap();
            let err = frobenius(&(out.matrix().unscale(nf.scale) - normal_form_state(nf.theta, nf.mu, da, db)));
            assert!(err < 1e-9, "trial {trial}: reconstruction {err}");
        }
    }

    fn unit_column_frame(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
        let mut m = random_complex_matrix(rng, d, d);
        for j in 0..d {
            let n = m.column(j).norm();
            m.column_mut(j).unscale_mut(n);
        }
        m
    }

    #[test]
    fn identity_cascade_for_rank_two_mc() {
        let h = FRAC_1_SQRT_2;
        let bell = ket(4, &[(0, c(h, 0.0)), (3, c(h, 0.0))]);
        let mut m = linalg::outer(&bell);
        m[(0, 0)] += c(0.3, 0.0);
        let rho = StateMatrix::new(st(2, 2), m).unwrap();
        let cas = projection_cascade(&rho, &EbBasis::maximally_correlated(2), &Tolerances::default()).unwrap();
        assert!(cas.steps.is_empty());
        assert_eq!(cas.final_rank, 2);
        assert!(cas.min_pt_eigenvalue < 0.0);
    }

    #[test]
    fn cascade_on_three_index_example() {
        // ψ = |0,1⟩ + |1,2⟩, φ = |0,1⟩ − |1,2⟩ with unequal weights
        let psi = ket(6, &[(1, ONE), (5, ONE)]);
        let phi = ket(6, &[(1, ONE), (5, -ONE)]);
        let rho = StateMatrix::new(st(2, 3), linalg::outer(&psi) + linalg::outer(&phi) * C64::from(0.5)).unwrap();
        let basis = EbBasis::new(vec![basis_vector(2, 1), basis_vector(2, 0), basis_vector(2, 1)], 3).unwrap();
        let cas = projection_cascade(&rho, &basis, &Tolerances::default()).unwrap();
        assert_eq!(cas.pair, (1, 2));
        assert!(cas.final_rank <= 2);
        assert!(cas.min_pt_eigenvalue < -1e-3);
        assert_eq!(cas.descriptors().len(), 1);
        assert_eq!(cas.steps[0].kind, StepKind::P);
        let replay = cas.replay(&rho).unwrap();
        assert!(frobenius(&(replay.matrix() - cas.final_state.matrix())) < 1e-12);
    }

    #[test]
    fn cascade_detects_separable_input() {
        let v = ket(4, &[(0, ONE)]);
        let w = ket(4, &[(3, ONE)]);
        let rho = StateMatrix::new(st(2, 2), linalg::outer(&v) + linalg::outer(&w)).unwrap();
        assert!(matches!(
            projection_cascade(&rho, &EbBasis::maximally_correlated(2), &Tolerances::default()),
            Err(Error::CascadeFailure(_))
        ));
    }

    #[test]
    fn peeling_path() {
        // ψ_1 = a ⊗ (|0⟩ + |1⟩) is a product; ψ_2 carries the entanglement on indices 1, 2
        let a = CVector::from_column_slice(&[ONE, c(0.5, 0.2)]);
        let b = CVector::from_column_slice(&[c(0.3, -0.1), ONE]);
        let basis = EbBasis::new(vec![a.clone(), a.clone() * c(2.0, 0.0), b.clone()], 3).unwrap();
        let s: Vec<CVector> = (0..3).map(|i| basis.span_vector(i)).collect();
        let psi1 = &s[0] + &s[1] * c(0.5, 0.0);
        let psi2 = &s[1] * c(0.7, 0.0) + &s[2] * c(0.4, 0.3);
        let rho = StateMatrix::new(st(2, 3), linalg::outer(&psi1) + linalg::outer(&psi2)).unwrap();
        let cas = projection_cascade(&rho, &basis, &Tolerances::default()).unwrap();
        let kinds: Vec<StepKind> = cas.steps.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, vec![StepKind::Q, StepKind::PPrime]);
        assert_eq!(cas.pair, (1, 2));
        let q = &cas.steps[0].operator;
        let qf = q.full_matrix();
        let v1 = &qf * &psi1;
        assert!((v1 - &s[0]).norm() < 1e-12);
        assert!((&qf * &psi2 - &psi2).norm() < 1e-12);
        assert!(cas.min_pt_eigenvalue < 0.0);
    }

    #[test]
    fn canonical_pair_relabels() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let basis = EbBasis::maximally_correlated(6);
        let s: Vec<CVector> = (0..6).map(|i| basis.span_vector(i)).collect();
        let psi = &s[3] * random_complex_vector(&mut rng, 1)[0] + &s[5] * random_complex_vector(&mut rng, 1)[0];
        let mut m = linalg::outer(&psi);
        m += linalg::outer(&s[5]) * C64::from(0.3);
        let rho = StateMatrix::new(st(6, 6), m).unwrap();
        let (cas, reduced) = reduce_to_canonical_pair(&rho, &basis, &Tolerances::default()).unwrap();
        assert_eq!(cas.pair, (3, 5));
        assert_eq!(cas.steps.last().unwrap().kind, StepKind::QPrime);
        assert_eq!(reduced.dims(), &[2, 2]);
        let before = linalg::eigvalsh(rho.matrix());
        let after = linalg::eigvalsh(reduced.matrix());
        let top = |v: &[f64]| v.iter().rev().take(2).copied().collect::<Vec<_>>();
        for (x, y) in top(&before).iter().zip(top(&after)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_json_round_trip() {
        let b = EbBasis::new(vec![basis_vector(2, 0), CVector::from_column_slice(&[c(0.5, 0.5), ONE])], 3).unwrap();
        let text = crate::io::to_json_string(&b).unwrap();
        assert_eq!(EbBasis::from_json(&text).unwrap(), b);
        assert!(EbBasis::from_json(r#"{"a_vectors":[[[1,0]]],"index_dim":0}"#).is_err());
    }
}
