//! Object maps and phrase embedding tables, exchanged as JSON documents.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};
use crate::vecmath;

/// Vectors shorter than this cannot be given a direction and are rejected.
pub const MIN_EMBEDDING_NORM: f64 = 1e-6;

fn normalize_embedding(v: &[f64], what: &str) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::schema(format!("{what}: embedding has non-finite components")));
    }
    let n = vecmath::norm(v);
    if n < MIN_EMBEDDING_NORM {
        return Err(Error::schema(format!("{what}: embedding is a zero vector")));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub id: u32,
    pub points: PointCloud,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectMap {
    embedding_dim: usize,
    objects: Vec<ObjectInstance>,
}

#[derive(Serialize, Deserialize)]
struct ObjectRecord {
    id: u32,
    embedding: Vec<f64>,
    points: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct ObjectMapDoc {
    embedding_dim: usize,
    objects: Vec<ObjectRecord>,
}

impl ObjectMap {
    /// Validates ids, dimensions and point sets; embeddings are rescaled to unit length.
    pub fn new(embedding_dim: usize, objects: Vec<ObjectInstance>) -> Result<Self> {
        if embedding_dim == 0 {
            return Err(Error::schema("embedding_dim must be positive"));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(objects.len());
        for mut obj in objects {
            if !seen.insert(obj.id) {
                return Err(Error::schema(format!("duplicate object id {}", obj.id)));
            }
            if obj.embedding.len() != embedding_dim {
                return Err(Error::schema(format!(
                    "object {}: embedding dimension {} does not match embedding_dim {}",
                    obj.id,
                    obj.embedding.len(),
                    embedding_dim
                )));
            }
            if obj.points.is_empty() {
                return Err(Error::schema(format!("object {} has no points", obj.id)));
            }
            obj.embedding = normalize_embedding(&obj.embedding, &format!("object {}", obj.id))?;
            out.push(obj);
        }
        Ok(Self {
            embedding_dim,
            objects: out,
        })
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn objects(&self) -> &[ObjectInstance] {
        &self.objects
    }

    pub fn get(&self, id: u32) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ObjectMapDoc = serde_json::from_str(text)?;
        let objects = doc
            .objects
            .into_iter()
            .map(|r| {
                let points = PointCloud::new(r.points.into_iter().map(Point3::from).collect())
                    .map_err(|e| Error::schema(format!("object {}: {e}", r.id)))?;
                Ok(ObjectInstance {
                    id: r.id,
                    points,
                    embedding: r.embedding,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.embedding_dim, objects)
    }

    pub fn to_json(&self) -> String {
        let doc = ObjectMapDoc {
            embedding_dim: self.embedding_dim,
            objects: self
                .objects
                .iter()
                .map(|o| ObjectRecord {
                    id: o.id,
                    embedding: o.embedding.clone(),
                    points: o.points.points().iter().map(|p| [p.x, p.y, p.z]).collect(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("object map serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Phrase to unit-vector table standing in for a text encoder. Phrases iterate in
/// lexicographic order, which is also the tie-break order for argmax decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    entries: BTreeMap<String, Vec<f64>>,
}

/// Map entries in document order, so duplicate keys can be reported instead of
/// silently overwritten.
struct OrderedEntries(Vec<(String, Vec<f64>)>);

impl<'de> Deserialize<'de> for OrderedEntries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EntriesVisitor;
        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = OrderedEntries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from phrase to vector")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Vec<f64>>()? {
                    out.push((k, v));
                }
                Ok(OrderedEntries(out))
            }
        }
        deserializer.deserialize_map(EntriesVisitor)
    }
}

#[derive(Deserialize)]
struct TableDocIn {
    embedding_dim: usize,
    entries: OrderedEntries,
}

#[derive(Serialize)]
struct TableDocOut<'a> {
    embedding_dim: usize,
    entries: &'a BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(entries: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut dim = None;
        for (phrase, v) in entries {
            let d = *dim.get_or_insert(v.len());
            if v.len() != d {
                return Err(Error::schema(format!(
                    "phrase '{phrase}': dimension {} differs from {d}",
                    v.len()
                )));
            }
            let unit = normalize_embedding(&v, &format!("phrase '{phrase}'"))?;
            if map.insert(phrase.clone(), unit).is_some() {
                return Err(Error::schema(format!("duplicate phrase '{phrase}'")));
            }
        }
        let dim = dim.ok_or_else(|| Error::schema("embedding table is empty"))?;
        if dim == 0 {
            return Err(Error::schema("embedding dimension must be positive"));
        }
        Ok(Self { dim, entries: map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, phrase: &str) -> Option<&[f64]> {
        self.entries.get(phrase).map(Vec::as_slice)
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.entries.contains_key(phrase)
    }

    /// Position of a phrase in lexicographic order.
    pub fn index_of(&self, phrase: &str) -> Option<usize> {
        self.entries.keys().position(|k| k == phrase)
    }

    pub fn phrases(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TableDocIn = serde_json::from_str(text)?;
        let table = Self::new(doc.entries.0)?;
        if table.dim != doc.embedding_dim {
            return Err(Error::schema(format!(
                "entries have dimension {} but embedding_dim is {}",
                table.dim, doc.embedding_dim
            )));
        }
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TableDocOut {
            embedding_dim: self.dim,
            entries: &self.entries,
        })
        .expect("table serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
