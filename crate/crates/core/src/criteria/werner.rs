use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{HilbertStructure, StateMatrix};
use crate::linalg::{frobenius, CMatrix, ONE};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WernerParams {
    pub d: usize,
    pub p: f64,
}

impl WernerParams {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        let w = Self { d, p };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Parameter(format!("Werner dimension {} < 2", self.d)));
        }
        if !(self.p.abs() <= 1.0) {
            return Err(Error::Parameter(format!("Werner parameter {} outside [-1, 1]", self.p)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WernerClass {
    Separable,
    #[serde(rename = "NPT_1COPY_UNDISTILLABLE")]
    Npt1CopyUndistillable,
    #[serde(rename = "NPT_1COPY_DISTILLABLE")]
    Npt1CopyDistillable,
}

/// The swap `V|ij⟩ = |ji⟩` on `d ⊗ d`.
pub fn swap_operator(d: usize) -> CMatrix {
    let mut v = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            v[(j * d + i, i * d + j)] = ONE;
        }
    }
    v
}

/// `(I + pV) / (d² + pd)` on `A ⊗ B`.
pub fn werner_state(params: WernerParams) -> Result<StateMatrix> {
    params.validate()?;
    let d = params.d;
    let df = d as f64;
    let m = (CMatrix::identity(d * d, d * d) + swap_operator(d).scale(params.p)).unscale(df * df + params.p * df);
    StateMatrix::new(HilbertStructure::new(vec![d, d], vec!["A", "B"])?, m)
}

/// Werner parameters of the closest member of the family, fitted through
/// `Tr(Vρ)`, together with the Frobenius distance to it.
pub fn fit_werner(rho: &StateMatrix) -> Result<(WernerParams, f64)> {
    let dims = rho.dims();
    if dims.len() != 2 || dims[0] != dims[1] {
        return Err(Error::Arity(format!("Werner states live on d ⊗ d, got dims {dims:?}")));
    }
    let d = dims[0];
    let m = rho.matrix().unscale(rho.trace());
    let t = (swap_operator(d) * &m).trace().re;
    let df = d as f64;
    let params = WernerParams::new(d, (1.0 - t * df) / (t - df))?;
    let residual = frobenius(&(werner_state(params)?.matrix() - m));
    Ok((params, residual))
}

pub fn classify_werner(params: WernerParams) -> Result<WernerClass> {
    params.validate()?;
    let p = params.p;
    Ok(if p >= -1.0 / params.d as f64 {
        WernerClass::Separable
    } else if p >= -0.5 {
        WernerClass::Npt1CopyUndistillable
    } else {
        WernerClass::Npt1CopyDistillable
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::partial_transpose_matrix;
    use crate::linalg::{frobenius, min_eigenvalue};

    #[test]
    fn symmetric_extreme() {
        let rho = werner_state(WernerParams::new(2, 1.0).unwrap()).unwrap();
        let sym = (CMatrix::identity(4, 4) + swap_operator(2)).scale(0.5);
        assert!(frobenius(&(rho.matrix() - sym.unscale(3.0))) < 1e-15);
        assert!((rho.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ppt_boundary() {
        let rho = werner_state(WernerParams::new(3, -1.0 / 3.0).unwrap()).unwrap();
        let pt = partial_transpose_matrix(rho.matrix(), &[3, 3], &[1]);
        assert!(min_eigenvalue(&pt).abs() < 1e-12);
        let rho = werner_state(WernerParams::new(3, -0.6).unwrap()).unwrap();
        let pt = partial_transpose_matrix(rho.matrix(), &[3, 3], &[1]);
        assert!(min_eigenvalue(&pt) < -1e-3);
    }

    #[test]
    fn fit_recovers_parameter() {
        for (d, p) in [(2, -0.8), (3, -0.6), (4, 0.35)] {
            let rho = werner_state(WernerParams::new(d, p).unwrap()).unwrap().scaled(2.5).unwrap();
            let (w, r) = fit_werner(&rho).unwrap();
            assert_eq!(w.d, d);
            assert!((w.p - p).abs() < 1e-13 && r < 1e-14);
        }
        let s = HilbertStructure::new(vec![2, 2], vec!["A", "B"]).unwrap();
        let mut m = CMatrix::identity(4, 4);
        m[(0, 0)] = ONE.scale(2.0);
        let (_, r) = fit_werner(&StateMatrix::new(s, m).unwrap()).unwrap();
        assert!(r > 1e-2);
    }

    #[test]
    fn classification() {
        let class = |d, p| classify_werner(WernerParams::new(d, p).unwrap()).unwrap();
        assert_eq!(class(3, 0.0), WernerClass::Separable);
        assert_eq!(class(3, -0.4), WernerClass::Npt1CopyUndistillable);
        assert_eq!(class(4, -0.9), WernerClass::Npt1CopyDistillable);
        assert_eq!(class(2, -0.5), WernerClass::Separable);
        assert!(WernerParams::new(1, 0.0).is_err());
        assert!(WernerParams::new(3, 1.5).is_err());
        assert_eq!(serde_json::to_string(&WernerClass::Npt1CopyDistillable).unwrap(), "\"NPT_1COPY_DISTILLABLE\"");
    }
}
