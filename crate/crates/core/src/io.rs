//! JSON encodings for states and matrices.
//!
//! Complex numbers are `[re, im]` pairs, matrices are row-major lists of
//! rows, and every float is written with 17 significant digits so that a
//! write/read cycle reproduces the bits.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::Result;
use crate::hilbert::{Factor, HilbertStructure, StateMatrix};
use crate::linalg::{c, CMatrix, CVector};
use crate::tolerance::Tolerances;

#[derive(Clone, Copy, Debug, Default)]
pub struct RoundTripFormatter;

impl Formatter for RoundTripFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, RoundTripFormatter);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub type ComplexPair = [f64; 2];

pub fn encode_matrix(m: &CMatrix) -> Vec<Vec<ComplexPair>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn decode_matrix(rows: &[Vec<ComplexPair>]) -> std::result::Result<CMatrix, String> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err("matrix rows have unequal lengths".into());
    }
    Ok(CMatrix::from_fn(n, m, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

pub fn encode_vector(v: &CVector) -> Vec<ComplexPair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn decode_vector(v: &[ComplexPair]) -> CVector {
    CVector::from_fn(v.len(), |i, _| c(v[i][0], v[i][1]))
}

/// `#[serde(with = "io::matrix")]` for [`CMatrix`] fields.
pub mod matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        encode_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<ComplexPair>>::deserialize(d)?;
        decode_matrix(&rows).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "io::matrices")]` for `Vec<CMatrix>` fields.
pub mod matrices {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(encode_matrix).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMatrix>, D::Error> {
        let raw = Vec::<Vec<Vec<ComplexPair>>>::deserialize(d)?;
        raw.iter().map(|r| decode_matrix(r).map_err(serde::de::Error::custom)).collect()
    }
}

/// `#[serde(with = "io::vector")]` for [`CVector`] fields.
pub mod vector {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> std::result::Result<S::Ok, S::Error> {
        encode_vector(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CVector, D::Error> {
        Ok(decode_vector(&Vec::<ComplexPair>::deserialize(d)?))
    }
}

/// `#[serde(with = "io::vectors")]` for `Vec<CVector>` fields.
pub mod vectors {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(vs: &[CVector], s: S) -> std::result::Result<S::Ok, S::Error> {
        vs.iter().map(encode_vector).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CVector>, D::Error> {
        Ok(Vec::<Vec<ComplexPair>>::deserialize(d)?.iter().map(|v| decode_vector(v)).collect())
    }
}

/// `Option` counterparts of the field encoders above, for optional evidence.
pub mod opt_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<CMatrix>, s: S) -> std::result::Result<S::Ok, S::Error> {
        m.as_ref().map(encode_matrix).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<CMatrix>, D::Error> {
        Option::<Vec<Vec<ComplexPair>>>::deserialize(d)?
            .map(|rows| decode_matrix(&rows).map_err(serde::de::Error::custom))
            .transpose()
    }
}

pub mod opt_matrices {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ms: &Option<Vec<CMatrix>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        ms.as_ref().map(|ms| ms.iter().map(encode_matrix).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<CMatrix>>, D::Error> {
        Option::<Vec<Vec<Vec<ComplexPair>>>>::deserialize(d)?
            .map(|raw| raw.iter().map(|r| decode_matrix(r).map_err(serde::de::Error::custom)).collect())
            .transpose()
    }
}

pub mod opt_vector {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<CVector>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref().map(encode_vector).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<CVector>, D::Error> {
        Ok(Option::<Vec<ComplexPair>>::deserialize(d)?.map(|v| decode_vector(&v)))
    }
}

/// On-disk form of a [`StateMatrix`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<Vec<Factor>>>,
    #[serde(with = "matrix")]
    pub matrix: CMatrix,
}

impl StateFile {
    pub fn from_state(rho: &StateMatrix) -> Self {
        let s = rho.structure();
        let any = (0..s.len()).any(|i| !s.factors(i).is_empty());
        Self {
            dims: s.dims().to_vec(),
            labels: s.labels().to_vec(),
            factors: any.then(|| (0..s.len()).map(|i| s.factors(i).to_vec()).collect()),
            matrix: rho.matrix().clone(),
        }
    }

    pub fn into_state(self, tol: &Tolerances) -> Result<StateMatrix> {
        let n = self.dims.len();
        let structure = HilbertStructure::with_factors(
            self.dims,
            self.labels,
            self.factors.unwrap_or_else(|| vec![Vec::new(); n]),
        )?;
        StateMatrix::with_tolerances(structure, self.matrix, tol)
    }
}

pub fn state_to_json(rho: &StateMatrix) -> Result<String> {
    to_json_string(&StateFile::from_state(rho))
}

pub fn state_from_json(text: &str, tol: &Tolerances) -> Result<StateMatrix> {
    serde_json::from_str::<StateFile>(text)?.into_state(tol)
}

pub fn write_state(path: impl AsRef<Path>, rho: &StateMatrix) -> Result<()> {
    write_json(path, &StateFile::from_state(rho))
}

pub fn read_state(path: impl AsRef<Path>, tol: &Tolerances) -> Result<StateMatrix> {
    read_json::<StateFile>(path)?.into_state(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::kc_product;
    use crate::linalg::random_density;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seventeen_digits() {
        let s = to_json_string(&[0.1_f64, -1.0 / 3.0, 1e-300]).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,-3.3333333333333331e-1,1.0000000000000000e-300]\n");
    }

    #[test]
    fn state_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = StateMatrix::new(
            HilbertStructure::new(vec![2, 2], vec!["A", "C1"]).unwrap(),
            random_density(&mut rng, 4, 4),
        )
        .unwrap();
        let b = a.relabeled(&["B", "C2"]).unwrap();
        let k = kc_product(&a, &b).unwrap();
        let text = state_to_json(&k).unwrap();
        let back = state_from_json(&text, &Tolerances::default()).unwrap();
        assert_eq!(back.matrix(), k.matrix());
        assert_eq!(back.structure(), k.structure());
        assert_eq!(state_to_json(&back).unwrap(), text);
    }

    #[test]
    fn malformed_matrix_rejected() {
        let text = r#"{"dims":[2],"labels":["A"],"matrix":[[[1,0],[0,0]],[[0,0]]]}"#;
        assert!(state_from_json(text, &Tolerances::default()).is_err());
        let text = r#"{"dims":[2],"labels":["A"],"matrix":[[[1,0]]]}"#;
        assert!(state_from_json(text, &Tolerances::default()).is_err());
    }
}
