//! Generators for the multipartite families built from bipartite inputs,
//! and the reduced-operator report for chained `⊗_Kc` products.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::criteria::{all_cuts, ge_certify, one_copy_distillable_search, ppt_check, Certificate, GeOptions};
use crate::eb::{verify_eb_membership, EbBasis};
use crate::error::{Error, Result};
use crate::hilbert::{
    kc_product_with_leads, merge_systems, partial_trace, permute_matrix, permute_systems, tensor_product,
    HilbertStructure, StateMatrix,
};
use crate::io::StateFile;
use crate::linalg::{self, frobenius, CMatrix};
use crate::measures::{additivity_ledger, AdditivityLedger};
use crate::rng::sub_seed;
use crate::tolerance::Tolerances;

pub const DEFAULT_DIM_CAP: usize = 64;

fn check_cap(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    Ok(())
}

/// `Σ_ij c_ij |ii⟩⟨jj|` on `A ⊗ C`.
pub fn mc_state(c: &CMatrix) -> Result<StateMatrix> {
    let n = c.nrows();
    if c.ncols() != n || n == 0 {
        return Err(Error::Shape(format!("coefficient matrix is {:?}, expected square", c.shape())));
    }
    let tol = Tolerances::default();
    let t = linalg::trace(c).re;
    if (t - 1.0).abs() > tol.trace {
        return Err(Error::Integrity(format!("coefficient matrix has trace {t}, expected 1")));
    }
    let coeffs = StateMatrix::new(HilbertStructure::with_default_labels(vec![n])?, c.clone())
        .map_err(|e| Error::Integrity(format!("coefficient matrix is not a state: {e}")))?;
    let c = coeffs.matrix();
    let mut m = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            m[(i * n + i, j * n + j)] = c[(i, j)];
        }
    }
    StateMatrix::new(HilbertStructure::new(vec![n, n], vec!["A", "C"])?, m)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainOptions {
    pub seed: u64,
    pub restarts: usize,
    pub certify: bool,
    pub dim_cap: usize,
    pub ge: GeOptions,
    pub tol: Tolerances,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 20,
            certify: true,
            dim_cap: DEFAULT_DIM_CAP,
            ge: GeOptions::default(),
            tol: Tolerances::default(),
        }
    }
}

/// The chained state with its marginals, per-cut certificates and the
/// EOF ledger. Inputs are stored relabelled to `(A_j, C_j)`; the state
/// lives on `(A_1, …, A_n, C)` with `C` factored as `C_1 ⋯ C_n`.
#[derive(Clone, Debug)]
pub struct Theorem8Report {
    pub state: StateMatrix,
    pub inputs: Vec<(StateMatrix, EbBasis)>,
    /// `A_pA_q` and `A_lC` marginals, keyed by concatenated labels.
    pub reduced_ops: BTreeMap<String, StateMatrix>,
    /// Distance of each marginal from its predicted product form.
    pub form_residuals: BTreeMap<String, f64>,
    pub bipartition_verdicts: BTreeMap<String, Certificate>,
    pub ledger: AdditivityLedger,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InputFile {
    pub state: StateFile,
    pub eb_basis: EbBasis,
}

/// Serialisable form of [`Theorem8Report`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Theorem8ReportFile {
    pub state: StateFile,
    pub inputs: Vec<InputFile>,
    pub reduced_ops: BTreeMap<String, StateFile>,
    pub form_residuals: BTreeMap<String, f64>,
    pub bipartition_verdicts: BTreeMap<String, Certificate>,
    pub ledger: AdditivityLedger,
}

impl Theorem8Report {
    pub fn to_file(&self) -> Theorem8ReportFile {
        Theorem8ReportFile {
            state: StateFile::from_state(&self.state),
            inputs: self
                .inputs
                .iter()
                .map(|(s, b)| InputFile { state: StateFile::from_state(s), eb_basis: b.clone() })
                .collect(),
            reduced_ops: self.reduced_ops.iter().map(|(k, v)| (k.clone(), StateFile::from_state(v))).collect(),
            form_residuals: self.form_residuals.clone(),
            bipartition_verdicts: self.bipartition_verdicts.clone(),
            ledger: self.ledger.clone(),
        }
    }
}

/// `α^(1) ⊗_Kc ⋯ ⊗_Kc α^(n)`, associated to the left.
pub fn chain_state(alphas: &[StateMatrix], dim_cap: usize) -> Result<StateMatrix> {
    if alphas.len() < 2 {
        return Err(Error::Arity("a chain needs at least two inputs".into()));
    }
    for (j, a) in alphas.iter().enumerate() {
        if a.structure().len() != 2 {
            return Err(Error::Arity(format!("input {} is not bipartite", j + 1)));
        }
    }
    check_cap(alphas.iter().map(StateMatrix::dim).product(), dim_cap)?;
    let relabeled: Vec<StateMatrix> = alphas
        .iter()
        .enumerate()
        .map(|(j, a)| a.relabeled(&[format!("A{}", j + 1), format!("C{}", j + 1)]))
        .collect::<Result<_>>()?;
    let mut rho = relabeled[0].clone();
    for (j, a) in relabeled.iter().enumerate().skip(1) {
        rho = kc_product_with_leads(&rho, j, a, 1)?;
    }
    let mut labels: Vec<String> = (1..=alphas.len()).map(|j| format!("A{j}")).collect();
    labels.push("C".into());
    rho.relabeled(&labels)
}

pub fn theorem8_chain(inputs: &[(StateMatrix, EbBasis)], opts: &ChainOptions) -> Result<Theorem8Report> {
    let tol = &opts.tol;
    let n = inputs.len();
    let alphas: Vec<StateMatrix> = inputs.iter().map(|(a, _)| a.clone()).collect();
    let state = chain_state(&alphas, opts.dim_cap)?;
    let mut stored = Vec::with_capacity(n);
    for (j, (alpha, basis)) in inputs.iter().enumerate() {
        verify_eb_membership(alpha, basis, tol)?;
        let (ppt, _) = ppt_check(alpha, &[alpha.labels()[0].as_str()], tol)?;
        if ppt {
            return Err(Error::Parameter(format!("input {} is PPT; an entangled input is required", j + 1)));
        }
        stored.push((alpha.relabeled(&[format!("A{}", j + 1), format!("C{}", j + 1)])?, basis.clone()));
    }
    let labels: Vec<String> = state.labels().to_vec();
    let mut reduced_ops = BTreeMap::new();
    let mut form_residuals = BTreeMap::new();
    for p in 0..n {
        for q in p + 1..n {
            let key = format!("{}{}", labels[p], labels[q]);
            let red = partial_trace(&state, &[labels[p].as_str(), labels[q].as_str()])?;
            let ap = partial_trace(&red, &[labels[p].as_str()])?;
            let aq = partial_trace(&red, &[labels[q].as_str()])?;
            let residual = frobenius(&(red.matrix() - linalg::kron(ap.matrix(), aq.matrix())));
            form_residuals.insert(key.clone(), residual);
            reduced_ops.insert(key, red);
        }
    }
    for (l, label) in labels.iter().enumerate().take(n) {
        let key = format!("{label}C");
        let red = partial_trace(&state, &[label.as_str(), "C"])?;
        let residual = frobenius(&(red.matrix() - predicted_alc(&stored, l)?));
        form_residuals.insert(key.clone(), residual);
        reduced_ops.insert(key, red);
    }

    let mut verdicts = BTreeMap::new();
    if opts.certify {
        let mut k = 0u64;
        for label in labels.iter().take(n) {
            let key = format!("{label}C");
            let cert = one_copy_distillable_search(
                &reduced_ops[&key],
                &[label.as_str()],
                opts.restarts,
                sub_seed(opts.seed, k),
                tol,
            )?;
            verdicts.insert(format!("{key} cut {label}"), cert);
            k += 1;
        }
        for cut in all_cuts(n + 1) {
            let side: Vec<&str> = cut.iter().map(|&i| labels[i].as_str()).collect();
            let cert = one_copy_distillable_search(&state, &side, opts.restarts, sub_seed(opts.seed, k), tol)?;
            verdicts.insert(format!("state cut {}", side.join("")), cert);
            k += 1;
        }
        if state.dim() <= opts.ge.dim_cap {
            let ge = GeOptions { seed: sub_seed(opts.seed, k), ..opts.ge.clone() };
            verdicts.insert("GE".into(), ge_certify(&state, &ge, tol)?);
        }
    }
    let mut report = Theorem8Report {
        state,
        inputs: stored,
        reduced_ops,
        form_residuals,
        bipartition_verdicts: verdicts,
        ledger: AdditivityLedger::default(),
    };
    report.ledger = additivity_ledger(&report, tol)?;
    Ok(report)
}

/// `α^(l) ⊗ ⊗_{j≠l} α^(j)_{C_j}` ordered as `(A_l, C_1, …, C_n)`.
fn predicted_alc(inputs: &[(StateMatrix, EbBasis)], l: usize) -> Result<CMatrix> {
    let n = inputs.len();
    let mut m = inputs[l].0.matrix().unscale(inputs[l].0.trace());
    let mut dims = inputs[l].0.dims().to_vec();
    for (j, (a, _)) in inputs.iter().enumerate() {
        if j != l {
            let c = partial_trace(a, &[a.labels()[1].as_str()])?;
            m = linalg::kron(&m, &c.matrix().unscale(c.trace()));
            dims.push(c.dim());
        }
    }
    // current order: A_l, C_l, then C_j (j ≠ l) ascending
    let mut order = vec![0];
    let mut next = 2;
    for j in 0..n {
        if j == l {
            order.push(1);
        } else {
            order.push(next);
            next += 1;
        }
    }
    Ok(permute_matrix(&m, &dims, &order))
}

/// `α_{AC_1⋯C_n} ⊗_Kc β_{BC_1⋯C_n}` with `C_j = C_{1,j} C_{2,j}`, on
/// `(A, B, C_1, …, C_n)`.
pub fn conjecture_i_state(alpha: &StateMatrix, beta: &StateMatrix, dim_cap: usize) -> Result<StateMatrix> {
    let na = alpha.structure().len();
    let nb = beta.structure().len();
    if na < 2 || na != nb {
        return Err(Error::Arity(format!("inputs have {na} and {nb} systems; need matching counts of at least two")));
    }
    check_cap(alpha.dim() * beta.dim(), dim_cap)?;
    let n = na - 1;
    let la: Vec<String> = std::iter::once("A".to_string()).chain((1..=n).map(|j| format!("C1,{j}"))).collect();
    let lb: Vec<String> = std::iter::once("B".to_string()).chain((1..=n).map(|j| format!("C2,{j}"))).collect();
    let rho = kc_product_with_leads(&alpha.relabeled(&la)?, 1, &beta.relabeled(&lb)?, 1)?;
    let labels: Vec<String> =
        ["A".to_string(), "B".to_string()].into_iter().chain((1..=n).map(|j| format!("C{j}"))).collect();
    rho.relabeled(&labels)
}

/// `α^(1)_{C_1B_2} ⊗ α^(2)_{C_2B_3} ⊗ ⋯ ⊗ α^(n)_{C_nB_1}` on `(A_1, …, A_n)`
/// with `A_j = B_j C_j`.
pub fn ring_state(alphas: &[StateMatrix], dim_cap: usize) -> Result<StateMatrix> {
    let n = alphas.len();
    if n < 3 {
        return Err(Error::Arity(format!("a ring needs at least three inputs, got {n}")));
    }
    check_bipartite(alphas)?;
    check_cap(alphas.iter().map(StateMatrix::dim).product(), dim_cap)?;
    let mut joint = alphas[0].relabeled(&["C1".to_string(), "B2".to_string()])?;
    for (j, a) in alphas.iter().enumerate().skip(1) {
        let next = (j + 1) % n + 1;
        joint = tensor_product(&joint, &a.relabeled(&[format!("C{}", j + 1), format!("B{next}")])?)?;
    }
    // joint order: C_1 B_2 C_2 B_3 … C_n B_1; position of C_j is 2(j-1), of B_j is 2(j-2) mod 2n + 1
    let mut order = Vec::with_capacity(2 * n);
    for j in 0..n {
        order.push((2 * (j + n - 1)) % (2 * n) + 1);
        order.push(2 * j);
    }
    let mut rho = permute_systems(&joint, &order)?;
    for j in 0..n {
        rho = merge_systems(&rho, j, 2, Some(&format!("A{}", j + 1)))?;
    }
    Ok(rho)
}

/// `α^(1)_{A_1B_1} ⊗ ⋯ ⊗ α^(n)_{A_nB_n}` on `(A, B_1, …, B_n)` with
/// `A = A_1 ⋯ A_n`.
pub fn satellite_state(alphas: &[StateMatrix], dim_cap: usize) -> Result<StateMatrix> {
    let n = alphas.len();
    if n < 2 {
        return Err(Error::Arity(format!("a satellite state needs at least two inputs, got {n}")));
    }
    check_bipartite(alphas)?;
    check_cap(alphas.iter().map(StateMatrix::dim).product(), dim_cap)?;
    let mut joint = alphas[0].relabeled(&["A1", "B1"])?;
    for (j, a) in alphas.iter().enumerate().skip(1) {
        joint = tensor_product(&joint, &a.relabeled(&[format!("A{}", j + 1), format!("B{}", j + 1)])?)?;
    }
    let order: Vec<usize> = (0..n).map(|j| 2 * j).chain((0..n).map(|j| 2 * j + 1)).collect();
    let rho = permute_systems(&joint, &order)?;
    merge_systems(&rho, 0, n, Some("A"))
}

fn check_bipartite(alphas: &[StateMatrix]) -> Result<()> {
    for (j, a) in alphas.iter().enumerate() {
        if a.structure().len() != 2 {
            return Err(Error::Arity(format!("input {} is not bipartite", j + 1)));
        }
    }
    Ok(())
}
