use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::EmbeddingTable;
use crate::labeler::RoomSample;
use crate::vecmath::{dot, normalized};

pub const DEFAULT_ROOM_TYPES: [&str; 8] = [
    "kitchen",
    "bedroom",
    "bathroom",
    "living room",
    "dining room",
    "office",
    "laundry room",
    "hallway",
];

/// Activity-style query phrases and the room type each one describes.
pub const QUERY_PHRASES: [(&str, &str); 8] = [
    ("place to cook", "kitchen"),
    ("place to sleep", "bedroom"),
    ("place to shower", "bathroom"),
    ("place to relax", "living room"),
    ("place to eat", "dining room"),
    ("place to work", "office"),
    ("place to wash clothes", "laundry room"),
    ("place to walk through", "hallway"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSpec {
    pub room_types: Vec<String>,
    pub categories_per_type: usize,
    pub embedding_dim: usize,
    /// Norm scale of the Gaussian noise added to each object embedding.
    pub sigma: f64,
    /// Size of the perturbation that separates a category from its room type.
    pub category_spread: f64,
    /// Size of the perturbation between a query vector and its room type.
    pub query_spread: f64,
    /// Fraction of each type's categories that also occur in the previous
    /// type's rooms in the confounded variant.
    pub confound_fraction: f64,
    pub seed: u64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            room_types: DEFAULT_ROOM_TYPES.iter().map(|s| s.to_string()).collect(),
            categories_per_type: 10,
            embedding_dim: 32,
            sigma: 0.1,
            category_spread: 0.35,
            query_spread: 0.25,
            confound_fraction: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectCategory {
    pub name: String,
    pub room_type: usize,
    pub prototype: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryFixture {
    pub phrase: String,
    pub room_type: String,
    pub embedding: Vec<f64>,
}

/// Room-type prototypes, object categories scattered around them, and query
/// vectors: the stand-in for a text/image embedding model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingWorld {
    pub spec: WorldSpec,
    /// Mutually orthogonal unit vectors, one per room type.
    pub type_prototypes: Vec<Vec<f64>>,
    pub categories: Vec<ObjectCategory>,
    /// Room-type phrase -> prototype.
    pub table: EmbeddingTable,
    pub queries: Vec<QueryFixture>,
}

fn gaussian_vec(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn random_unit(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        if let Some(v) = normalized(&gaussian_vec(rng, d)) {
            return v;
        }
    }
}

fn perturbed(base: &[f64], amount: f64, rng: &mut impl Rng) -> Vec<f64> {
    let u = random_unit(rng, base.len());
    let v: Vec<f64> = base.iter().zip(&u).map(|(b, x)| b + amount * x).collect();
    normalized(&v).unwrap_or_else(|| base.to_vec())
}

pub fn generate_embedding_world(spec: &WorldSpec) -> Result<EmbeddingWorld> {
    let n = spec.room_types.len();
    let d = spec.embedding_dim;
    if n == 0 {
        return Err(Error::invalid("at least one room type is required"));
    }
    if d < n {
        return Err(Error::invalid(format!("embedding_dim {d} is smaller than the {n} room types")));
    }
    if spec.categories_per_type == 0 {
        return Err(Error::invalid("categories_per_type must be positive"));
    }
    if !(spec.sigma >= 0.0) || !(0.0..=1.0).contains(&spec.confound_fraction) {
        return Err(Error::invalid("sigma must be non-negative and confound_fraction in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Gram-Schmidt on Gaussian draws, redrawing on (unlikely) near-dependence.
    let mut protos: Vec<Vec<f64>> = Vec::with_capacity(n);
    while protos.len() < n {
        let mut v = gaussian_vec(&mut rng, d);
        for _ in 0..2 {
            for p in &protos {
                let c = dot(&v, p);
                v.iter_mut().zip(p).for_each(|(a, b)| *a -= c * b);
            }
        }
        if crate::vecmath::norm(&v) > 1e-3 {
            protos.push(normalized(&v).expect("norm checked"));
        }
    }

    let mut categories = Vec::with_capacity(n * spec.categories_per_type);
    for (t, proto) in protos.iter().enumerate() {
        for k in 0..spec.categories_per_type {
            categories.push(ObjectCategory {
                name: format!("{} object {k}", spec.room_types[t]),
                room_type: t,
                prototype: perturbed(proto, spec.category_spread, &mut rng),
            });
        }
    }

    let table = EmbeddingTable::new(spec.room_types.iter().cloned().zip(protos.iter().cloned()))?;
    let queries = spec
        .room_types
        .iter()
        .zip(&protos)
        .map(|(ty, proto)| {
            let phrase = QUERY_PHRASES
                .iter()
                .find(|(_, t)| t == ty)
                .map_or_else(|| format!("place like a {ty}"), |(q, _)| q.to_string());
            QueryFixture {
                phrase,
                room_type: ty.clone(),
                embedding: perturbed(proto, spec.query_spread, &mut rng),
            }
        })
        .collect();

    Ok(EmbeddingWorld {
        spec: spec.clone(),
        type_prototypes: protos,
        categories,
        table,
        queries,
    })
}

impl EmbeddingWorld {
    pub fn type_index(&self, room_type: &str) -> Option<usize> {
        self.spec.room_types.iter().position(|t| t == room_type)
    }

    fn shared_count(&self) -> usize {
        (self.spec.confound_fraction * self.spec.categories_per_type as f64).round() as usize
    }

    /// Categories that occur in rooms of `room_type`. In the confounded
    /// variant the pool also holds the first `confound_fraction` of the next
    /// type's categories.
    pub fn pool(&self, room_type: usize, confounded: bool) -> Vec<usize> {
        let per = self.spec.categories_per_type;
        let mut pool: Vec<usize> = (room_type * per..(room_type + 1) * per).collect();
        if confounded && self.spec.room_types.len() > 1 {
            let next = (room_type + 1) % self.spec.room_types.len();
            pool.extend(next * per..next * per + self.shared_count());
        }
        pool
    }

    /// Category prototype plus isotropic Gaussian noise of expected norm
    /// about `sigma`, renormalized.
    pub fn sample_embedding(&self, category: usize, rng: &mut impl Rng) -> Vec<f64> {
        let proto = &self.categories[category].prototype;
        if self.spec.sigma == 0.0 {
            return proto.clone();
        }
        let scale = self.spec.sigma / (proto.len() as f64).sqrt();
        let v: Vec<f64> = proto.iter().map(|p| p + scale * rng.sample::<f64, _>(StandardNormal)).collect();
        normalized(&v).unwrap_or_else(|| proto.clone())
    }

    /// `(category, embedding)` for `count` objects of a room of `room_type`.
    pub fn sample_objects(&self, room_type: usize, count: usize, confounded: bool, rng: &mut impl Rng) -> Vec<(usize, Vec<f64>)> {
        let pool = self.pool(room_type, confounded);
        (0..count)
            .map(|_| {
                let cat = *pool.choose(rng).expect("pool is non-empty");
                (cat, self.sample_embedding(cat, rng))
            })
            .collect()
    }

    /// `count` labeled rooms with types cycling through all room types, each
    /// holding a uniform number of objects from `objects`.
    pub fn room_samples(&self, count: usize, objects: (usize, usize), confounded: bool, seed: u64) -> Result<Vec<RoomSample>> {
        if objects.0 == 0 || objects.0 > objects.1 {
            return Err(Error::invalid("object count range must be non-empty and start at 1 or more"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_types = self.spec.room_types.len();
        (0..count)
            .map(|k| {
                let t = k % n_types;
                let n = rng.random_range(objects.0..=objects.1);
                let embeddings = self.sample_objects(t, n, confounded, &mut rng).into_iter().map(|(_, e)| e).collect();
                RoomSample::new(embeddings, self.spec.room_types[t].clone())
            })
            .collect()
    }

    /// Query phrase -> vector table.
    pub fn query_table(&self) -> Result<EmbeddingTable> {
        EmbeddingTable::new(self.queries.iter().map(|q| (q.phrase.clone(), q.embedding.clone())))
    }
}
