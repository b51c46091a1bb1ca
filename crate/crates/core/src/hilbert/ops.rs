use crate::error::{Error, Result};
use crate::hilbert::structure::strides;
use crate::hilbert::{HilbertStructure, LocalOperator, PureVector, StateMatrix};
use crate::linalg::{self, CMatrix, CVector};
use crate::tolerance::Tolerances;

/// `ρ ⊗ σ` on the concatenated structure.
pub fn tensor_product(rho: &StateMatrix, sigma: &StateMatrix) -> Result<StateMatrix> {
    let structure = rho.structure().concat(sigma.structure())?;
    Ok(StateMatrix::from_parts_unchecked(structure, linalg::kron(rho.matrix(), sigma.matrix())))
}

/// Index map for reordering tensor factors: entry `new` holds the old
/// flat index, where new subsystem `j` is old subsystem `order[j]`.
pub fn permutation_indices(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let old_strides = strides(dims);
    let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    let total: usize = dims.iter().product();
    let mut map = vec![0usize; total];
    let mut digits = vec![0usize; dims.len()];
    for (new_idx, slot) in map.iter_mut().enumerate() {
        let mut rem = new_idx;
        for j in (0..new_dims.len()).rev() {
            digits[j] = rem % new_dims[j];
            rem /= new_dims[j];
        }
        *slot = order.iter().zip(&digits).map(|(&k, &d)| d * old_strides[k]).sum();
    }
    map
}

pub fn permute_matrix(m: &CMatrix, dims: &[usize], order: &[usize]) -> CMatrix {
    let map = permutation_indices(dims, order);
    CMatrix::from_fn(m.nrows(), m.ncols(), |a, b| m[(map[a], map[b])])
}

pub fn permute_vector(v: &CVector, dims: &[usize], order: &[usize]) -> CVector {
    let map = permutation_indices(dims, order);
    CVector::from_fn(v.len(), |a, _| v[map[a]])
}

/// Reorder the subsystems of a state; new subsystem `j` is old `order[j]`.
pub fn permute_systems(rho: &StateMatrix, order: &[usize]) -> Result<StateMatrix> {
    check_order(order, rho.structure().len())?;
    let m = permute_matrix(rho.matrix(), rho.dims(), order);
    Ok(StateMatrix::from_parts_unchecked(rho.structure().permuted(order), m))
}

pub fn permute_pure(v: &PureVector, order: &[usize]) -> Result<PureVector> {
    check_order(order, v.structure().len())?;
    PureVector::new(v.structure().permuted(order), permute_vector(v.vector(), v.structure().dims(), order))
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::Arity(format!("permutation of length {} for {n} subsystems", order.len())));
    }
    for &k in order {
        if k >= n || seen[k] {
            return Err(Error::Arity("invalid permutation".into()));
        }
        seen[k] = true;
    }
    Ok(())
}

/// Merge adjacent subsystems `start..start+count`. The matrix is unchanged.
pub fn merge_systems(rho: &StateMatrix, start: usize, count: usize, label: Option<&str>) -> Result<StateMatrix> {
    rho.with_structure(rho.structure().merged(start, count, label)?)
}

/// Kronecker product of an `n`-partite and an `m`-partite state: the first
/// `m` systems are paired as `(A_i B_i)` and the rest of `ρ` follows.
pub fn kron_merge(rho: &StateMatrix, sigma: &StateMatrix, pairing: &[(String, String)]) -> Result<StateMatrix> {
    let n = rho.structure().len();
    let m = sigma.structure().len();
    if m > n {
        return Err(Error::Arity(format!("second operand has {m} systems, first only {n}")));
    }
    if pairing.len() != m {
        return Err(Error::Arity(format!("pairing lists {} pairs, expected {m}", pairing.len())));
    }
    for (i, (a, b)) in pairing.iter().enumerate() {
        if &rho.labels()[i] != a || &sigma.labels()[i] != b {
            return Err(Error::Arity(format!(
                "pair {i} is ({a}, {b}) but the operands start with ({}, {})",
                rho.labels()[i],
                sigma.labels()[i]
            )));
        }
    }
    let joint = tensor_product(rho, sigma)?;
    let order = kron_order(n, m);
    let mut out = permute_systems(&joint, &order)?;
    for i in 0..m {
        out = merge_systems(&out, i, 2, None)?;
    }
    Ok(out)
}

/// System order of `ρ ⊗ σ` that interleaves the first `m` pairs.
pub fn kron_order(n: usize, m: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(n + m);
    for i in 0..m {
        order.push(i);
        order.push(n + i);
    }
    order.extend(m..n);
    order
}

/// `α ⊗_Kc β` for `α` on `(A, C_{1,1..n})` and `β` on `(B, C_{2,1..n})`,
/// giving `(A, B, C_1, ..., C_n)` with `C_j = C_{1,j} C_{2,j}`.
pub fn kc_product(alpha: &StateMatrix, beta: &StateMatrix) -> Result<StateMatrix> {
    kc_product_with_leads(alpha, 1, beta, 1)
}

/// Generalised `⊗_Kc`: the first `leads_a` systems of `α` and the first
/// `leads_b` systems of `β` stay separate, the remaining systems are merged
/// pairwise in order. Used for left-associated chains.
pub fn kc_product_with_leads(
    alpha: &StateMatrix,
    leads_a: usize,
    beta: &StateMatrix,
    leads_b: usize,
) -> Result<StateMatrix> {
    let na = alpha.structure().len();
    let nb = beta.structure().len();
    if leads_a == 0 || leads_b == 0 || leads_a >= na || leads_b >= nb {
        return Err(Error::Arity("each operand needs lead systems and at least one C system".into()));
    }
    let ca = na - leads_a;
    let cb = nb - leads_b;
    if ca != cb {
        return Err(Error::Arity(format!("operands carry {ca} and {cb} C systems")));
    }
    let joint = tensor_product(alpha, beta)?;
    let mut order: Vec<usize> = (0..leads_a).collect();
    order.extend(na..na + leads_b);
    for j in 0..ca {
        order.push(leads_a + j);
        order.push(na + leads_b + j);
    }
    let mut out = permute_systems(&joint, &order)?;
    let first_c = leads_a + leads_b;
    for j in 0..ca {
        out = merge_systems(&out, first_c + j, 2, None)?;
    }
    Ok(out)
}

/// Reduced operator on the labelled subsystems, in their original order.
pub fn partial_trace<S: AsRef<str>>(rho: &StateMatrix, keep: &[S]) -> Result<StateMatrix> {
    if keep.is_empty() {
        return Err(Error::Structure("partial trace must keep at least one subsystem".into()));
    }
    let keep_idx = rho.structure().indices_of(keep)?;
    Ok(partial_trace_indices(rho, &keep_idx))
}

pub fn partial_trace_indices(rho: &StateMatrix, keep: &[usize]) -> StateMatrix {
    let m = partial_trace_matrix(rho.matrix(), rho.dims(), keep);
    StateMatrix::from_parts_unchecked(rho.structure().sub_structure(keep), m)
}

/// Partial trace on a raw matrix; `keep` must be sorted.
pub fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let mut order = keep.to_vec();
    order.extend(&traced);
    let p = permute_matrix(m, dims, &order);
    let dk: usize = keep.iter().map(|&i| dims[i]).product();
    let dt: usize = traced.iter().map(|&i| dims[i]).product();
    CMatrix::from_fn(dk, dk, |r, col| (0..dt).map(|t| p[(r * dt + t, col * dt + t)]).sum())
}

/// Partial transpose over the labelled subsystems.
pub fn partial_transpose<S: AsRef<str>>(rho: &StateMatrix, systems: &[S]) -> Result<CMatrix> {
    let idx = rho.structure().indices_of(systems)?;
    Ok(partial_transpose_matrix(rho.matrix(), rho.dims(), &idx))
}

pub fn partial_transpose_matrix(m: &CMatrix, dims: &[usize], systems: &[usize]) -> CMatrix {
    if systems.is_empty() {
        return m.clone();
    }
    let st = strides(dims);
    let n = m.nrows();
    // digit of each flat index on the transposed systems, weighted by stride
    let part: Vec<usize> = (0..n).map(|idx| systems.iter().map(|&k| (idx / st[k]) % dims[k] * st[k]).sum()).collect();
    CMatrix::from_fn(n, n, |a, b| {
        let a2 = a - part[a] + part[b];
        let b2 = b - part[b] + part[a];
        m[(a2, b2)]
    })
}

/// `X ρ X†`.
pub fn apply_local(rho: &StateMatrix, op: &LocalOperator) -> Result<StateMatrix> {
    if op.structure().dims() != rho.dims() {
        return Err(Error::Shape(format!(
            "operator acts on dims {:?}, state has dims {:?}",
            op.structure().dims(),
            rho.dims()
        )));
    }
    let x = op.full_matrix();
    let out = &x * rho.matrix() * x.adjoint();
    let structure = op.output_structure()?.relabeled(rho.labels())?;
    let structure = carry_factors(rho.structure(), structure);
    Ok(StateMatrix::from_parts_unchecked(structure, out))
}

fn carry_factors(from: &HilbertStructure, to: HilbertStructure) -> HilbertStructure {
    if from.dims() == to.dims() {
        from.clone()
    } else {
        to
    }
}

/// Number of eigenvalues above `tol · λ_max`.
pub fn numerical_rank(rho: &StateMatrix, tol: f64) -> Result<usize> {
    check_tol(tol)?;
    Ok(rank_of_matrix(rho.matrix(), tol))
}

pub fn rank_of_matrix(m: &CMatrix, tol: f64) -> usize {
    let vals = linalg::eigvalsh(m);
    let lmax = vals.last().copied().unwrap_or(0.0);
    if lmax <= 0.0 {
        return 0;
    }
    vals.iter().filter(|&&l| l > tol * lmax).count()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    let defect = linalg::hermiticity_defect(m);
    if defect > Tolerances::default().herm {
        return Err(Error::Integrity(format!("matrix is not Hermitian (defect {defect:.3e})")));
    }
    Ok(linalg::min_eigenvalue(m))
}

/// Orthonormal eigenvectors of the eigenvalues above `tol · λ_max`,
/// largest eigenvalue first.
pub fn range_basis(rho: &StateMatrix, tol: f64) -> Result<Vec<PureVector>> {
    check_tol(tol)?;
    let (vals, vecs) = linalg::eigh(rho.matrix());
    let lmax = vals.last().copied().unwrap_or(0.0);
    if lmax <= 0.0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for k in (0..vals.len()).rev() {
        if vals[k] > tol * lmax {
            out.push(PureVector::new(rho.structure().clone(), vecs.column(k).into_owned())?);
        }
    }
    Ok(out)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("tolerance must be positive, got {tol}")))
    }
}
