//! Multipartite state representation and the tensor-structure operations
//! everything else is built on.

mod ops;
mod state;
mod structure;

pub use ops::{
    apply_local, kc_product, kc_product_with_leads, kron_merge, kron_order, merge_systems, min_eigenvalue,
    numerical_rank, partial_trace, partial_trace_indices, partial_trace_matrix, partial_transpose,
    partial_transpose_matrix, permutation_indices, permute_matrix, permute_pure, permute_systems, permute_vector,
    range_basis, rank_of_matrix, tensor_product,
};
pub use state::{LocalOperator, PureVector, StateMatrix};
pub use structure::{Factor, HilbertStructure};
