//! Named parameter storage.

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::tensor::Float;

/// Handle to a parameter inside a [`ParamStore`]; stable for a given model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamRole {
    Weight { fan_in: usize },
    Bias,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub role: ParamRole,
}

impl ParamSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

/// Ordered map from parameter name to values. Insertion order is the
/// model's construction order and is what [`ParamId`]s index.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ParamStore<T> {
    entries: IndexMap<String, Param<T>>,
}

impl<T: Float> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            entries: IndexMap::new(),
        }
    }

    /// Zero-filled store laid out after `specs`.
    pub fn zeros(specs: &[ParamSpec]) -> Self {
        let mut store = ParamStore::new();
        for spec in specs {
            store
                .insert(&spec.name, spec.shape.clone(), vec![T::ZERO; spec.len()])
                .expect("specs carry unique names");
        }
        store
    }

    pub fn insert(&mut self, name: &str, shape: Vec<usize>, data: Vec<T>) -> Result<ParamId> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::Shape(format!(
                "parameter `{name}`: {} values for shape {shape:?}",
                data.len()
            )));
        }
        if self.entries.contains_key(name) {
            return Err(Error::InvalidArgument(format!("duplicate parameter `{name}`")));
        }
        let (i, _) = self.entries.insert_full(name.to_string(), Param { shape, data });
        Ok(ParamId(i))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalars.
    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(|p| p.data.len()).sum()
    }

    pub fn get(&self, name: &str) -> Option<&Param<T>> {
        self.entries.get(name)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.entries.get_index_of(name).map(ParamId)
    }

    pub fn by_id(&self, id: ParamId) -> &Param<T> {
        &self.entries[id.0]
    }

    pub fn by_id_mut(&mut self, id: ParamId) -> &mut Param<T> {
        &mut self.entries[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param<T>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param<T>)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn all_finite(&self) -> bool {
        self.entries.values().all(|p| p.data.iter().all(|v| v.is_finite()))
    }

    pub fn cast<U: Float>(&self) -> ParamStore<U> {
        ParamStore {
            entries: self
                .entries
                .iter()
                .map(|(k, p)| {
                    (
                        k.clone(),
                        Param {
                            shape: p.shape.clone(),
                            data: p.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
                        },
                    )
                })
                .collect(),
        }
    }

    /// Checks that this store has exactly the names and shapes in `specs`,
    /// in the same order.
    pub fn check_layout(&self, specs: &[ParamSpec]) -> Result<()> {
        let same = self.entries.len() == specs.len()
            && specs
                .iter()
                .zip(self.entries.iter())
                .all(|(s, (name, p))| &s.name == name && s.shape == p.shape);
        if same {
            return Ok(());
        }
        for spec in specs {
            match self.entries.get(&spec.name) {
                None => return Err(Error::MissingParameter(spec.name.clone())),
                Some(p) if p.shape != spec.shape => {
                    return Err(Error::ParameterShape {
                        name: spec.name.clone(),
                        expected: spec.shape.clone(),
                        found: p.shape.clone(),
                    })
                }
                Some(_) => {}
            }
        }
        let known: std::collections::HashSet<&str> = specs.iter().map(|s| s.name.as_str()).collect();
        if let Some(extra) = self.entries.keys().find(|k| !known.contains(k.as_str())) {
            return Err(Error::UnexpectedParameter(extra.clone()));
        }
        Err(Error::InvalidArgument(
            "parameter order differs from the model layout".into(),
        ))
    }

    /// Reorders entries to follow `specs` after [`check_layout`]-style
    /// validation of names and shapes.
    pub fn reordered(mut self, specs: &[ParamSpec]) -> Result<Self> {
        let mut out = ParamStore::new();
        for spec in specs {
            let p = self
                .entries
                .shift_remove(&spec.name)
                .ok_or_else(|| Error::MissingParameter(spec.name.clone()))?;
            if p.shape != spec.shape {
                return Err(Error::ParameterShape {
                    name: spec.name.clone(),
                    expected: spec.shape.clone(),
                    found: p.shape,
                });
            }
            out.insert(&spec.name, p.shape, p.data)?;
        }
        if let Some(extra) = self.entries.keys().next() {
            return Err(Error::UnexpectedParameter(extra.clone()));
        }
        Ok(out)
    }
}
