use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One constituent of a merged subsystem.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered tensor factorisation of a Hilbert space.
///
/// Merged subsystems carry a label of the form `C1*C2` and remember their
/// constituents so that a merge can be undone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertStructure {
    dims: Vec<usize>,
    labels: Vec<String>,
    factors: Vec<Vec<Factor>>,
}

const DEFAULT_LABELS: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];

impl HilbertStructure {
    pub fn new<S: Into<String>>(dims: Vec<usize>, labels: Vec<S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let factors = vec![Vec::new(); dims.len()];
        Self::with_factors(dims, labels, factors)
    }

    pub(crate) fn with_factors(dims: Vec<usize>, labels: Vec<String>, factors: Vec<Vec<Factor>>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Structure("at least one subsystem is required".into()));
        }
        if dims.len() != labels.len() {
            return Err(Error::Structure(format!("{} dims but {} labels", dims.len(), labels.len())));
        }
        if let Some(k) = dims.iter().position(|&d| d == 0) {
            return Err(Error::Structure(format!("subsystem {k} has dimension 0")));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::Structure(format!("subsystem {i} has an empty label")));
            }
            if labels[..i].contains(l) {
                return Err(Error::Structure(format!("duplicate label `{l}`")));
            }
        }
        for (i, f) in factors.iter().enumerate() {
            if !f.is_empty() && f.iter().map(|x| x.dim).product::<usize>() != dims[i] {
                return Err(Error::Structure(format!(
                    "factor dimensions of `{}` do not multiply to {}",
                    labels[i], dims[i]
                )));
            }
        }
        Ok(Self { dims, labels, factors })
    }

    /// Labels `A, B, C, ...` in order.
    pub fn with_default_labels(dims: Vec<usize>) -> Result<Self> {
        let labels = (0..dims.len())
            .map(|i| match DEFAULT_LABELS.get(i) {
                Some(l) => l.to_string(),
                None => format!("S{i}"),
            })
            .collect::<Vec<_>>();
        Self::new(dims, labels)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn factors(&self, index: usize) -> &[Factor] {
        &self.factors[index]
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.index_of(label)?])
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Resolve labels to sorted, deduplicated indices.
    pub fn indices_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let i = self.index_of(l.as_ref())?;
            if !out.contains(&i) {
                out.push(i);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn complement(&self, indices: &[usize]) -> Vec<usize> {
        (0..self.len()).filter(|i| !indices.contains(i)).collect()
    }

    pub fn sub_structure(&self, indices: &[usize]) -> Self {
        Self {
            dims: indices.iter().map(|&i| self.dims[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            factors: indices.iter().map(|&i| self.factors[i].clone()).collect(),
        }
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        if let Some(l) = other.labels.iter().find(|l| self.labels.contains(l)) {
            return Err(Error::LabelCollision(l.clone()));
        }
        let mut out = self.clone();
        out.dims.extend_from_slice(&other.dims);
        out.labels.extend(other.labels.iter().cloned());
        out.factors.extend(other.factors.iter().cloned());
        Ok(out)
    }

    /// Reordered structure where new subsystem `j` is old subsystem `order[j]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        self.sub_structure(order)
    }

    pub fn relabeled<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::Arity(format!("{} labels supplied for {} subsystems", labels.len(), self.len())));
        }
        Self::with_factors(
            self.dims.clone(),
            labels.iter().map(|l| l.as_ref().to_string()).collect(),
            self.factors.clone(),
        )
    }

    /// Merge the adjacent subsystems `start..start+count` into one.
    ///
    /// The new label joins the constituent labels with `*` unless `label`
    /// is given. Nested merges are flattened.
    pub fn merged(&self, start: usize, count: usize, label: Option<&str>) -> Result<Self> {
        if count == 0 || start + count > self.len() {
            return Err(Error::Structure(format!(
                "cannot merge {count} subsystems starting at {start} of {}",
                self.len()
            )));
        }
        let mut parts = Vec::new();
        for i in start..start + count {
            if self.factors[i].is_empty() {
                parts.push(Factor { label: self.labels[i].clone(), dim: self.dims[i] });
            } else {
                parts.extend(self.factors[i].iter().cloned());
            }
        }
        let joined = match label {
            Some(l) => l.to_string(),
            None => self.labels[start..start + count].join("*"),
        };
        let dim = self.dims[start..start + count].iter().product();
        let mut dims = self.dims[..start].to_vec();
        let mut labels = self.labels[..start].to_vec();
        let mut factors = self.factors[..start].to_vec();
        dims.push(dim);
        labels.push(joined);
        factors.push(if count == 1 && self.factors[start].is_empty() { Vec::new() } else { parts });
        dims.extend_from_slice(&self.dims[start + count..]);
        labels.extend(self.labels[start + count..].iter().cloned());
        factors.extend(self.factors[start + count..].iter().cloned());
        Self::with_factors(dims, labels, factors)
    }

    /// Split a merged subsystem back into its recorded constituents.
    pub fn unmerged(&self, index: usize) -> Result<Self> {
        let parts = &self.factors[index];
        if parts.is_empty() {
            return Err(Error::Structure(format!("`{}` is not a merged subsystem", self.labels[index])));
        }
        let mut dims = self.dims[..index].to_vec();
        let mut labels = self.labels[..index].to_vec();
        let mut factors = self.factors[..index].to_vec();
        for p in parts {
            dims.push(p.dim);
            labels.push(p.label.clone());
            factors.push(Vec::new());
        }
        dims.extend_from_slice(&self.dims[index + 1..]);
        labels.extend(self.labels[index + 1..].iter().cloned());
        factors.extend(self.factors[index + 1..].iter().cloned());
        Self::with_factors(dims, labels, factors)
    }
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

#[derive(Serialize, Deserialize)]
struct StructureRepr {
    dims: Vec<usize>,
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factors: Option<Vec<Vec<Factor>>>,
}

impl Serialize for HilbertStructure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let any = self.factors.iter().any(|f| !f.is_empty());
        StructureRepr {
            dims: self.dims.clone(),
            labels: self.labels.clone(),
            factors: any.then(|| self.factors.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HilbertStructure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = StructureRepr::deserialize(d)?;
        let factors = r.factors.unwrap_or_else(|| vec![Vec::new(); r.dims.len()]);
        HilbertStructure::with_factors(r.dims, r.labels, factors).map_err(serde::de::Error::custom)
    }
}
