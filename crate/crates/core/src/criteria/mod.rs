//! Entanglement criteria and certificates.
//!
//! Bipartite tests (PPT, negativity, one-copy distillability) take a cut as
//! the labels of one side. Multipartite certification relaxes biseparability
//! to mixtures of parts that are PPT across their own bipartition, and
//! certifies genuine entanglement with fully decomposable witnesses.

mod certificate;
mod distill;
mod ge;
mod ppt;
mod werner;

pub use certificate::{verify_certificate, Certificate, CheckResult, Evidence, Verdict, VerificationReport};
pub use distill::{one_copy_distillable_search, schmidt_coefficients};
pub use ge::{
    ge_certify, ppt_mixture_search, projector_witness, witness_certify, GeOptions, MixtureSearch, MixtureStatus,
};
pub use ppt::{negativity, ppt_certificate, ppt_check};
pub use werner::{classify_werner, fit_werner, swap_operator, werner_state, WernerClass, WernerParams};

use crate::error::{Error, Result};
use crate::hilbert::HilbertStructure;

/// Indices of one side of a bipartite cut, sorted. Rejects the empty and
/// the full set.
pub fn cut_indices<S: AsRef<str>>(structure: &HilbertStructure, side: &[S]) -> Result<Vec<usize>> {
    let idx = structure.indices_of(side)?;
    if idx.is_empty() || idx.len() == structure.len() {
        return Err(Error::Arity(format!(
            "a cut needs a non-empty proper subset of the {} subsystems",
            structure.len()
        )));
    }
    Ok(idx)
}

/// Every bipartition of `n` parties once, as the side that is smaller (or,
/// on ties, the side holding party 0). Ordered by size, then lexicographically.
pub fn all_cuts(n: usize) -> Vec<Vec<usize>> {
    let full = (1usize << n) - 1;
    let mut out: Vec<Vec<usize>> = Vec::new();
    for mask in 1..full {
        let comp = full ^ mask;
        let (a, b) = (mask.count_ones(), comp.count_ones());
        let canonical = a < b || (a == b && mask & 1 == 1);
        if canonical {
            out.push((0..n).filter(|k| mask >> k & 1 == 1).collect());
        }
    }
    out.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
    out
}

/// Permutation putting `side` first (in its order) and the rest after.
pub(crate) fn side_first(n: usize, side: &[usize]) -> Vec<usize> {
    let mut order = side.to_vec();
    order.extend((0..n).filter(|k| !side.contains(k)));
    order
}

pub(crate) fn inverse_permutation(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; order.len()];
    for (j, &k) in order.iter().enumerate() {
        inv[k] = j;
    }
    inv
}

pub(crate) fn cut_labels(structure: &HilbertStructure, side: &[usize]) -> Vec<String> {
    side.iter().map(|&k| structure.labels()[k].clone()).collect()
}
