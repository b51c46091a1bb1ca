use crate::error::{Error, Result};
use crate::hilbert::HilbertStructure;
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::tolerance::Tolerances;

/// Positive semidefinite operator on a [`HilbertStructure`].
///
/// States are kept unnormalised unless [`StateMatrix::normalized`] is called.
#[derive(Clone, Debug)]
pub struct StateMatrix {
    structure: HilbertStructure,
    matrix: CMatrix,
    normalized: bool,
}

impl StateMatrix {
    pub fn new(structure: HilbertStructure, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(structure, matrix, &Tolerances::default())
    }

    pub fn with_tolerances(structure: HilbertStructure, matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        let n = structure.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Shape(format!(
                "matrix is {}x{} but the structure has total dimension {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Integrity("matrix has non-finite entries".into()));
        }
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > tol.herm {
            return Err(Error::Integrity(format!("matrix is not Hermitian (defect {defect:.3e})")));
        }
        let matrix = linalg::hermitian_part(&matrix);
        let vals = linalg::eigvalsh(&matrix);
        let lmax = vals.last().copied().unwrap_or(0.0).max(0.0);
        let lmin = vals.first().copied().unwrap_or(0.0);
        if lmin < -tol.psd * lmax.max(f64::MIN_POSITIVE) && lmin < -f64::EPSILON {
            return Err(Error::Integrity(format!("matrix is not positive semidefinite (min eigenvalue {lmin:.3e})")));
        }
        let normalized = (matrix.trace().re - 1.0).abs() <= tol.trace;
        Ok(Self { structure, matrix, normalized })
    }

    /// Build without the spectral check. Only for operators that are PSD by
    /// construction (tensor products, partial traces, local conjugations).
    pub(crate) fn from_parts_unchecked(structure: HilbertStructure, matrix: CMatrix) -> Self {
        let matrix = linalg::hermitian_part(&matrix);
        let normalized = (matrix.trace().re - 1.0).abs() <= Tolerances::default().trace;
        Self { structure, matrix, normalized }
    }

    pub fn from_pure(v: &PureVector) -> Self {
        Self::from_parts_unchecked(v.structure().clone(), linalg::outer(v.vector()))
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn labels(&self) -> &[String] {
        self.structure.labels()
    }

    pub fn dims(&self) -> &[usize] {
        self.structure.dims()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::Integrity("cannot normalise a zero-trace state".into()));
        }
        Ok(Self { structure: self.structure.clone(), matrix: self.matrix.unscale(t), normalized: true })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if factor < 0.0 {
            return Err(Error::Parameter("negative scale".into()));
        }
        Ok(Self::from_parts_unchecked(self.structure.clone(), self.matrix.scale(factor)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.structure.dims() != other.structure.dims() {
            return Err(Error::Shape("cannot add states on different structures".into()));
        }
        Ok(Self::from_parts_unchecked(self.structure.clone(), &self.matrix + &other.matrix))
    }

    pub fn with_structure(&self, structure: HilbertStructure) -> Result<Self> {
        if structure.total_dim() != self.dim() {
            return Err(Error::Shape("replacement structure has a different total dimension".into()));
        }
        Ok(Self { structure, matrix: self.matrix.clone(), normalized: self.normalized })
    }

    pub fn relabeled<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        self.with_structure(self.structure.relabeled(labels)?)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// Vector on a [`HilbertStructure`]; nonzero, not necessarily unit.
#[derive(Clone, Debug)]
pub struct PureVector {
    structure: HilbertStructure,
    vector: CVector,
    unit: bool,
}

impl PureVector {
    pub fn new(structure: HilbertStructure, vector: CVector) -> Result<Self> {
        if vector.len() != structure.total_dim() {
            return Err(Error::Shape(format!(
                "vector length {} does not match total dimension {}",
                vector.len(),
                structure.total_dim()
            )));
        }
        let n = vector.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Integrity("vector must have positive finite norm".into()));
        }
        let unit = (n - 1.0).abs() < 1e-12;
        Ok(Self { structure, vector, unit })
    }

    pub fn from_slice(structure: HilbertStructure, amps: &[C64]) -> Result<Self> {
        Self::new(structure, CVector::from_column_slice(amps))
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn is_unit(&self) -> bool {
        self.unit
    }

    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }

    pub fn normalized(&self) -> Self {
        let n = self.vector.norm();
        Self { structure: self.structure.clone(), vector: self.vector.unscale(n), unit: true }
    }

    pub fn to_state(&self) -> StateMatrix {
        StateMatrix::from_pure(self)
    }
}

/// Product operator `X_1 ⊗ ... ⊗ X_n`; factor `i` maps subsystem `i` into
/// a space of dimension `nrows(X_i)`.
#[derive(Clone, Debug)]
pub struct LocalOperator {
    structure: HilbertStructure,
    factors: Vec<CMatrix>,
}

impl LocalOperator {
    pub fn new(structure: HilbertStructure, factors: Vec<CMatrix>) -> Result<Self> {
        if factors.len() != structure.len() {
            return Err(Error::Shape(format!("{} factors for {} subsystems", factors.len(), structure.len())));
        }
        for (i, (f, &d)) in factors.iter().zip(structure.dims()).enumerate() {
            if f.ncols() != d || f.nrows() == 0 {
                return Err(Error::Shape(format!(
                    "factor {i} is {}x{} but subsystem dimension is {d}",
                    f.nrows(),
                    f.ncols()
                )));
            }
        }
        Ok(Self { structure, factors })
    }

    pub fn identity(structure: &HilbertStructure) -> Self {
        let factors = structure.dims().iter().map(|&d| CMatrix::identity(d, d)).collect();
        Self { structure: structure.clone(), factors }
    }

    /// Identity everywhere except `factor` on the subsystem at `index`.
    pub fn single(structure: &HilbertStructure, index: usize, factor: CMatrix) -> Result<Self> {
        let mut factors: Vec<CMatrix> = structure.dims().iter().map(|&d| CMatrix::identity(d, d)).collect();
        if index >= factors.len() {
            return Err(Error::Shape(format!("subsystem index {index} out of range")));
        }
        factors[index] = factor;
        Self::new(structure.clone(), factors)
    }

    pub fn structure(&self) -> &HilbertStructure {
        &self.structure
    }

    pub fn factors(&self) -> &[CMatrix] {
        &self.factors
    }

    pub fn output_structure(&self) -> Result<HilbertStructure> {
        let dims = self.factors.iter().map(|f| f.nrows()).collect();
        HilbertStructure::new(dims, self.structure.labels().to_vec())
    }

    pub fn full_matrix(&self) -> CMatrix {
        let mut it = self.factors.iter();
        let first = it.next().expect("at least one factor").clone();
        it.fold(first, |acc, f| acc.kronecker(f))
    }

    /// Composition `self ∘ inner` (apply `inner` first).
    pub fn after(&self, inner: &LocalOperator) -> Result<Self> {
        let out = inner.output_structure()?;
        if out.dims() != self.structure.dims() {
            return Err(Error::Shape("operators cannot be composed".into()));
        }
        let factors = self.factors.iter().zip(&inner.factors).map(|(a, b)| a * b).collect();
        Self::new(inner.structure.clone(), factors)
    }
}
